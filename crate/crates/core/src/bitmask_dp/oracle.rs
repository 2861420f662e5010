//! Evaluators for `F(Y, x) = sum over y in Y of C[y][x]`.

use std::thread;

use crate::error::Result;
use crate::graph::CrossingMatrix;
use crate::limits::ensure_fits;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DpVariant {
    /// O(n) per query, no extra memory.
    Slow,
    /// Full `2^n * n` table.
    Fast,
    /// Two half tables of `2^(n/2) * n` entries.
    Mitm,
}

impl DpVariant {
    pub fn name(self) -> &'static str {
        match self {
            DpVariant::Slow => "slow-dp",
            DpVariant::Fast => "fast-dp",
            DpVariant::Mitm => "mitm-dp",
        }
    }

    /// Default largest free layer for the variant.
    pub fn default_cap(self) -> usize {
        match self {
            DpVariant::Slow | DpVariant::Mitm => 30,
            DpVariant::Fast => 27,
        }
    }

    /// Bytes held by the F oracle for `n` free vertices.
    pub fn oracle_bytes(self, n: usize) -> u64 {
        let n64 = n as u64;
        match self {
            DpVariant::Slow => 8 * n64 * n64,
            DpVariant::Fast => 8u64.saturating_mul(n64).saturating_mul(1u64 << n.min(63)),
            DpVariant::Mitm => {
                let h = n / 2;
                8 * n64 * ((1u64 << h) + (1u64 << (n - h)))
            }
        }
    }
}

pub trait FunctionF: Sync {
    /// `F(set, x)`; `set` must not contain `x` for the value to be meaningful.
    fn eval(&self, set: u64, x: usize) -> u64;
}

/// Sums a column of `C` over the set bits on every query.
#[derive(Debug, Clone)]
pub struct SlowF {
    n: usize,
    /// `columns[x * n + y] = C[y][x]`.
    columns: Vec<u64>,
}

impl SlowF {
    pub fn new(c: &CrossingMatrix) -> Self {
        SlowF {
            n: c.n(),
            columns: c.transposed(),
        }
    }
}

impl FunctionF for SlowF {
    #[inline]
    fn eval(&self, mut set: u64, x: usize) -> u64 {
        let col = &self.columns[x * self.n..(x + 1) * self.n];
        let mut total = 0;
        while set != 0 {
            total += col[set.trailing_zeros() as usize];
            set &= set - 1;
        }
        total
    }
}

/// `table[x << n | Y] = F(Y, x)`.
#[derive(Debug, Clone)]
pub struct FastF {
    n: usize,
    table: Vec<u64>,
}

impl FastF {
    pub fn new(c: &CrossingMatrix, workers: usize) -> Self {
        let n = c.n();
        FastF {
            n,
            table: subset_sum_rows(c, 0, n, workers),
        }
    }
}

impl FunctionF for FastF {
    #[inline]
    fn eval(&self, set: u64, x: usize) -> u64 {
        self.table[(x << self.n) | set as usize]
    }
}

/// Meet in the middle: `F(Y, x) = F1(Y & low, x) + F2(Y >> half, x)` where the
/// low half covers vertices `0..n/2`.
#[derive(Debug, Clone)]
pub struct MitmF {
    half: usize,
    high_bits: usize,
    low: Vec<u64>,
    high: Vec<u64>,
}

impl MitmF {
    pub fn new(c: &CrossingMatrix, workers: usize) -> Self {
        let n = c.n();
        let half = n / 2;
        MitmF {
            half,
            high_bits: n - half,
            low: subset_sum_rows(c, 0, half, workers),
            high: subset_sum_rows(c, half, n - half, workers),
        }
    }
}

impl FunctionF for MitmF {
    #[inline]
    fn eval(&self, set: u64, x: usize) -> u64 {
        let low_mask = (1u64 << self.half) - 1;
        self.low[(x << self.half) | (set & low_mask) as usize]
            + self.high[(x << self.high_bits) | (set >> self.half) as usize]
    }
}

/// For every target `x` of `C`, the sums `F(Y, x)` over all subsets `Y` of
/// the `width` vertices starting at `offset`, laid out as one row of
/// `2^width` entries per target. Rows are filled in parallel.
fn subset_sum_rows(c: &CrossingMatrix, offset: usize, width: usize, workers: usize) -> Vec<u64> {
    let n = c.n();
    let row_len = 1usize << width;
    let mut table = vec![0u64; n * row_len];
    let fill = |x: usize, row: &mut [u64]| {
        for conf in 1..row_len {
            let v = usize::BITS as usize - 1 - conf.leading_zeros() as usize;
            row[conf] = row[conf ^ (1 << v)] + c.get(v + offset, x);
        }
    };
    let workers = workers.clamp(1, n.max(1));
    if workers == 1 || n < 2 {
        for (x, row) in table.chunks_mut(row_len).enumerate() {
            fill(x, row);
        }
        return table;
    }
    thread::scope(|s| {
        let mut buckets: Vec<Vec<(usize, &mut [u64])>> = (0..workers).map(|_| Vec::new()).collect();
        for (x, row) in table.chunks_mut(row_len).enumerate() {
            buckets[x % workers].push((x, row));
        }
        for bucket in buckets {
            let fill = &fill;
            s.spawn(move || {
                for (x, row) in bucket {
                    fill(x, row);
                }
            });
        }
    });
    table
}

#[derive(Debug, Clone)]
pub enum FOracle {
    Slow(SlowF),
    Fast(FastF),
    Mitm(MitmF),
}

impl FOracle {
    pub fn variant(&self) -> DpVariant {
        match self {
            FOracle::Slow(_) => DpVariant::Slow,
            FOracle::Fast(_) => DpVariant::Fast,
            FOracle::Mitm(_) => DpVariant::Mitm,
        }
    }

    pub fn eval(&self, set: u64, x: usize) -> u64 {
        match self {
            FOracle::Slow(f) => f.eval(set, x),
            FOracle::Fast(f) => f.eval(set, x),
            FOracle::Mitm(f) => f.eval(set, x),
        }
    }
}

/// Builds the oracle for `variant`, refusing tables larger than `mem_budget`
/// bytes.
pub fn build_f_oracle(
    c: &CrossingMatrix,
    variant: DpVariant,
    workers: usize,
    mem_budget: u64,
) -> Result<FOracle> {
    ensure_fits(
        &format!("{} F table", variant.name()),
        variant.oracle_bytes(c.n()),
        mem_budget,
    )?;
    Ok(match variant {
        DpVariant::Slow => FOracle::Slow(SlowF::new(c)),
        DpVariant::Fast => FOracle::Fast(FastF::new(c, workers)),
        DpVariant::Mitm => FOracle::Mitm(MitmF::new(c, workers)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::OscmError;

    fn matrix(n: usize, seed: u64) -> CrossingMatrix {
        let mut state = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
        let mut entries = vec![0; n * n];
        for x in 0..n {
            for y in 0..n {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                if x != y {
                    entries[x * n + y] = state % 50;
                }
            }
        }
        CrossingMatrix::from_entries(n, entries).unwrap()
    }

    #[test]
    fn empty_and_singleton_sets() {
        let c = matrix(6, 1);
        for variant in [DpVariant::Slow, DpVariant::Fast, DpVariant::Mitm] {
            let f = build_f_oracle(&c, variant, 2, u64::MAX).unwrap();
            for x in 0..6 {
                assert_eq!(f.eval(0, x), 0);
                for y in 0..6 {
                    assert_eq!(f.eval(1 << y, x), c.get(y, x));
                }
            }
        }
    }

    #[test]
    fn variants_agree_exhaustively() {
        for n in [0usize, 1, 2, 5, 8, 9] {
            let c = matrix(n, n as u64 + 7);
            let slow = build_f_oracle(&c, DpVariant::Slow, 1, u64::MAX).unwrap();
            let fast = build_f_oracle(&c, DpVariant::Fast, 3, u64::MAX).unwrap();
            let mitm = build_f_oracle(&c, DpVariant::Mitm, 3, u64::MAX).unwrap();
            for set in 0u64..1 << n {
                for x in 0..n {
                    let expected: u64 = (0..n).filter(|y| set >> y & 1 == 1).map(|y| c.get(y, x)).sum();
                    assert_eq!(slow.eval(set, x), expected);
                    assert_eq!(fast.eval(set, x), expected);
                    assert_eq!(mitm.eval(set, x), expected);
                }
            }
        }
    }

    #[test]
    fn fast_table_respects_budget() {
        let c = matrix(10, 3);
        let err = build_f_oracle(&c, DpVariant::Fast, 1, 1000).unwrap_err();
        assert!(matches!(err, OscmError::Capacity { .. }));
        assert!(build_f_oracle(&c, DpVariant::Mitm, 1, 1 << 20).is_ok());
    }
}
