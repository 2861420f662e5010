//! Exact dynamic programming over subsets of the free layer.
//!
//! `dp[X]` is the fewest crossings achievable among the vertices of `X` alone,
//! with `dp[X] = min over v in X of dp[X - v] + F(X - v, v)`. States are
//! processed layer by layer (by popcount) so that a layer can be split
//! between workers; a barrier separates consecutive layers.

mod layers;
mod oracle;

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Barrier;
use std::thread;

pub use layers::{binomial, get_kth_state, LayerWorkPlan, MAX_BINOMIAL_N};
pub use oracle::{build_f_oracle, DpVariant, FOracle, FastF, FunctionF, MitmF, SlowF};

pub(crate) use layers::{for_each_in_range, worker_range};

use crate::error::{OscmError, Result};
use crate::graph::{compute_crossing_matrix, BipartiteInstance, SolveResult};
use crate::limits::{default_memory_budget, ensure_fits, Deadline};

/// Marks a dp entry that has not been computed.
pub const UNSET: u64 = u64::MAX;

#[derive(Debug, Clone)]
pub struct DpConfig {
    /// Overrides the variant's default free-layer cap.
    pub max_free: Option<usize>,
    pub mem_budget: u64,
    pub deadline: Deadline,
}

impl Default for DpConfig {
    fn default() -> Self {
        DpConfig {
            max_free: None,
            mem_budget: default_memory_budget(),
            deadline: Deadline::none(),
        }
    }
}

impl DpConfig {
    pub fn cap(&self, variant: DpVariant) -> usize {
        self.max_free.unwrap_or_else(|| variant.default_cap())
    }

    /// Checks size and memory limits without doing any work.
    pub fn check_capacity(&self, n: usize, variant: DpVariant) -> Result<()> {
        let cap = self.cap(variant).min(MAX_BINOMIAL_N - 1);
        if n > cap {
            return Err(OscmError::Capacity {
                what: format!("{} free-layer size", variant.name()),
                requested: n as u64,
                limit: cap as u64,
            });
        }
        let needed = 8u64
            .saturating_mul(1u64 << n)
            .saturating_add(variant.oracle_bytes(n));
        ensure_fits(variant.name(), needed, self.mem_budget)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DpTable {
    n: usize,
    values: Vec<u64>,
}

impl DpTable {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn get(&self, set: u64) -> u64 {
        self.values[set as usize]
    }

    /// `dp` of the full free layer.
    pub fn optimum(&self) -> u64 {
        self.values[self.values.len() - 1]
    }
}

#[inline]
fn best_extension<F: FunctionF>(f: &F, set: u64, load: impl Fn(u64) -> u64) -> u64 {
    let mut best = UNSET;
    let mut bits = set;
    while bits != 0 {
        let v = bits.trailing_zeros() as usize;
        bits &= bits - 1;
        let prev = set ^ (1 << v);
        let cand = load(prev) + f.eval(prev, v);
        if cand < best {
            best = cand;
        }
    }
    best
}

fn fill_sequential<F: FunctionF>(n: usize, f: &F, deadline: &Deadline) -> Result<DpTable> {
    let mut values = vec![UNSET; 1 << n];
    values[0] = 0;
    for layer in 1..=n {
        deadline.check()?;
        for_each_in_range(n, layer, 1, binomial(n, layer), |set| {
            let best = best_extension(f, set, |s| values[s as usize]);
            values[set as usize] = best;
        });
    }
    Ok(DpTable { n, values })
}

fn fill_parallel<F: FunctionF>(
    n: usize,
    f: &F,
    workers: usize,
    deadline: &Deadline,
) -> Result<DpTable> {
    let cells: Vec<AtomicU64> = (0..1usize << n).map(|_| AtomicU64::new(UNSET)).collect();
    cells[0].store(0, Ordering::Relaxed);
    let barrier = Barrier::new(workers);
    let stop = AtomicBool::new(false);

    thread::scope(|s| {
        for j in 0..workers {
            let (cells, barrier, stop) = (&cells, &barrier, &stop);
            s.spawn(move || {
                for layer in 1..=n {
                    let (first, count) = worker_range(binomial(n, layer), workers, j);
                    for_each_in_range(n, layer, first, count, |set| {
                        let best =
                            best_extension(f, set, |s| cells[s as usize].load(Ordering::Relaxed));
                        cells[set as usize].store(best, Ordering::Relaxed);
                    });
                    if deadline.expired() {
                        stop.store(true, Ordering::Relaxed);
                    }
                    barrier.wait();
                    let halt = stop.load(Ordering::Relaxed);
                    barrier.wait();
                    if halt {
                        return;
                    }
                }
            });
        }
    });

    if stop.into_inner() {
        return Err(OscmError::Timeout);
    }
    let values = cells.into_iter().map(AtomicU64::into_inner).collect();
    Ok(DpTable { n, values })
}

/// Fills the table, splitting each layer between `workers` threads when
/// `workers > 1`.
pub fn fill_dp(oracle: &FOracle, n: usize, workers: usize, deadline: &Deadline) -> Result<DpTable> {
    fn run<F: FunctionF>(f: &F, n: usize, workers: usize, deadline: &Deadline) -> Result<DpTable> {
        if workers <= 1 {
            fill_sequential(n, f, deadline)
        } else {
            fill_parallel(n, f, workers, deadline)
        }
    }
    match oracle {
        FOracle::Slow(f) => run(f, n, workers, deadline),
        FOracle::Fast(f) => run(f, n, workers, deadline),
        FOracle::Mitm(f) => run(f, n, workers, deadline),
    }
}

/// Walks back from the full set, each time removing the lowest-index vertex
/// that attains the stored value. Returns the optimal order.
pub fn reconstruct(dp: &DpTable, oracle: &FOracle) -> Vec<usize> {
    let n = dp.n();
    let mut order = vec![0; n];
    let mut set: u64 = if n == 0 { 0 } else { (1u64 << n) - 1 };
    for slot in (0..n).rev() {
        let target = dp.get(set);
        let mut bits = set;
        let v = loop {
            let v = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            let prev = set ^ (1 << v);
            if dp.get(prev) + oracle.eval(prev, v) == target {
                break v;
            }
            assert!(bits != 0, "dp table is inconsistent");
        };
        order[slot] = v;
        set ^= 1 << v;
    }
    order
}

fn solve_with(
    inst: &BipartiteInstance,
    variant: DpVariant,
    workers: usize,
    cfg: &DpConfig,
) -> Result<SolveResult> {
    let n = inst.n_free();
    cfg.check_capacity(n, variant)?;
    let c = compute_crossing_matrix(inst);
    let oracle = build_f_oracle(&c, variant, workers, cfg.mem_budget)?;
    let dp = fill_dp(&oracle, n, workers, &cfg.deadline)?;
    let order = reconstruct(&dp, &oracle);
    let result = SolveResult::verified(inst, order)?;
    debug_assert_eq!(result.crossings, dp.optimum());
    Ok(result)
}

pub fn solve_sequential(
    inst: &BipartiteInstance,
    variant: DpVariant,
    cfg: &DpConfig,
) -> Result<SolveResult> {
    solve_with(inst, variant, 1, cfg)
}

/// Same result as [`solve_sequential`]; layers are split across `workers`
/// threads and reconstruction stays sequential.
pub fn solve_parallel(
    inst: &BipartiteInstance,
    variant: DpVariant,
    workers: usize,
    cfg: &DpConfig,
) -> Result<SolveResult> {
    solve_with(inst, variant, workers.max(1), cfg)
}
