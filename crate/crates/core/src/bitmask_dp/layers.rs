//! Layer enumeration: unranking fixed-popcount masks and splitting a layer
//! between workers.

use std::sync::OnceLock;

use crate::error::{OscmError, Result};

pub const MAX_BINOMIAL_N: usize = 64;

fn table() -> &'static [[u64; MAX_BINOMIAL_N + 1]; MAX_BINOMIAL_N + 1] {
    static TABLE: OnceLock<[[u64; MAX_BINOMIAL_N + 1]; MAX_BINOMIAL_N + 1]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [[0u64; MAX_BINOMIAL_N + 1]; MAX_BINOMIAL_N + 1];
        for n in 0..=MAX_BINOMIAL_N {
            t[n][0] = 1;
            for k in 1..=n {
                // C(64, 32) < 2^63, so the additions below never overflow.
                t[n][k] = t[n - 1][k - 1] + if k < n { t[n - 1][k] } else { 0 };
            }
        }
        t
    })
}

/// `C(n, k)`, zero when `k > n`.
#[inline]
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        0
    } else {
        table()[n][k]
    }
}

/// The `k`-th (1-based) `n`-bit mask with exactly `i` bits set. Masks are
/// produced in increasing numeric order.
pub fn get_kth_state(n: usize, i: usize, k: u64) -> Result<u64> {
    let count = if n <= MAX_BINOMIAL_N { binomial(n, i) } else { 0 };
    if k == 0 || k > count {
        return Err(OscmError::RankOutOfRange {
            n,
            layer: i,
            k,
            count,
        });
    }
    Ok(kth_state(n, i, k))
}

#[inline]
pub(crate) fn kth_state(n: usize, mut i: usize, mut k: u64) -> u64 {
    let mut x = 0u64;
    let mut v = n;
    while v > 0 && i > 0 {
        v -= 1;
        let c = binomial(v, i);
        if c < k {
            k -= c;
            i -= 1;
            x |= 1 << v;
        }
    }
    x
}

/// Next larger mask with the same popcount (Gosper's hack). `x` must be
/// non-zero.
#[inline]
pub(crate) fn next_same_popcount(x: u64) -> u64 {
    let c = x & x.wrapping_neg();
    let r = x + c;
    (((r ^ x) >> 2) / c) | r
}

/// Calls `f` for the ranks `first..first + count` of layer `i` over `n` bits.
#[inline]
pub(crate) fn for_each_in_range(n: usize, i: usize, first: u64, count: u64, mut f: impl FnMut(u64)) {
    if count == 0 {
        return;
    }
    let mut x = kth_state(n, i, first);
    for step in 0..count {
        f(x);
        if step + 1 < count {
            x = next_same_popcount(x);
        }
    }
}

/// Contiguous split of one layer's ranks between workers. Worker `j` gets
/// `ceil(total / workers)` states when `j < total % workers` and
/// `floor(total / workers)` otherwise.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerWorkPlan {
    pub layer: usize,
    pub work: Vec<u64>,
    /// 1-based first rank of each worker's range.
    pub start: Vec<u64>,
}

impl LayerWorkPlan {
    pub fn new(n: usize, layer: usize, workers: usize) -> Self {
        Self::for_count(layer, binomial(n, layer), workers)
    }

    pub fn for_count(layer: usize, total: u64, workers: usize) -> Self {
        let workers = workers.max(1);
        let (work, start) = (0..workers)
            .map(|j| worker_range(total, workers, j))
            .map(|(first, count)| (count, first))
            .unzip();
        LayerWorkPlan { layer, work, start }
    }

    pub fn total(&self) -> u64 {
        self.work.iter().sum()
    }
}

/// `(first_rank, count)` for worker `j` out of `workers` over `total` ranks.
#[inline]
pub(crate) fn worker_range(total: u64, workers: usize, j: usize) -> (u64, u64) {
    let p = workers as u64;
    let j = j as u64;
    let base = total / p;
    let extra = total % p;
    let count = if j < extra { base + 1 } else { base };
    let first = j * base + j.min(extra) + 1;
    (first, count)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(0, 0), 1);
        assert_eq!(binomial(3, 4), 0);
        assert_eq!(binomial(64, 32), 1_832_624_140_942_590_534);
    }

    #[test]
    fn kth_state_examples() {
        assert_eq!(get_kth_state(3, 1, 1).unwrap(), 0b001);
        assert_eq!(get_kth_state(3, 1, 2).unwrap(), 0b010);
        assert_eq!(get_kth_state(3, 1, 3).unwrap(), 0b100);
        assert_eq!(get_kth_state(7, 7, 1).unwrap(), 0b111_1111);
        assert_eq!(get_kth_state(4, 0, 1).unwrap(), 0);
        assert!(get_kth_state(3, 1, 4).is_err());
        assert!(get_kth_state(3, 1, 0).is_err());
    }

    #[test]
    fn unranking_matches_sorted_enumeration() {
        for n in 0..=10usize {
            for i in 0..=n {
                let expected: Vec<u64> = (0u64..1 << n)
                    .filter(|m| m.count_ones() as usize == i)
                    .collect();
                let got: Vec<u64> = (1..=binomial(n, i))
                    .map(|k| get_kth_state(n, i, k).unwrap())
                    .collect();
                assert_eq!(got, expected, "n={n} i={i}");
                let mut walked = Vec::new();
                for_each_in_range(n, i, 1, binomial(n, i), |x| walked.push(x));
                assert_eq!(walked, expected);
            }
        }
    }

    #[test]
    fn work_plan_formula() {
        let plan = LayerWorkPlan::for_count(3, 10, 4);
        assert_eq!(plan.work, vec![3, 3, 2, 2]);
        assert_eq!(plan.start, vec![1, 4, 7, 9]);

        let plan = LayerWorkPlan::for_count(1, 2, 5);
        assert_eq!(plan.work, vec![1, 1, 0, 0, 0]);
        assert_eq!(plan.total(), 2);
    }

    proptest::proptest! {
        #[test]
        fn work_plan_partitions(total in 0u64..10_000, workers in 1usize..40) {
            let plan = LayerWorkPlan::for_count(0, total, workers);
            proptest::prop_assert_eq!(plan.total(), total);
            let max = *plan.work.iter().max().unwrap();
            let min = *plan.work.iter().min().unwrap();
            proptest::prop_assert!(max - min <= 1);
            let mut next = 1;
            for (s, w) in plan.start.iter().zip(&plan.work) {
                proptest::prop_assert_eq!(*s, next);
                next += w;
            }
        }
    }
}
