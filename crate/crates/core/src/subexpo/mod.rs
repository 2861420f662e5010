//! Interval-sweep dynamic programming whose cost is exponential only in the
//! widest set of simultaneously open intervals.

mod intervals;
mod sweep;

use std::collections::HashMap;

pub use intervals::{
    build_interval_system, characterize_instance, characterize_system, Event, EventKind,
    IntervalSystem, WidthReport,
};

use crate::error::{OscmError, Result};
use crate::graph::{compute_crossing_matrix, BipartiteInstance, SolveResult};
use crate::limits::{default_memory_budget, ensure_fits, Deadline};

use sweep::{run_parallel, run_sequential, OpenRecord, Record, Sweep};

pub const DEFAULT_WIDTH_CAP: usize = 30;

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub width_cap: usize,
    pub mem_budget: u64,
    /// Bytes allowed for stored argmin choices. Above this the sweep is
    /// replayed once per needed step during reconstruction instead.
    pub choice_budget: u64,
    pub deadline: Deadline,
}

impl Default for SweepConfig {
    fn default() -> Self {
        let mem_budget = default_memory_budget();
        SweepConfig {
            width_cap: DEFAULT_WIDTH_CAP,
            mem_budget,
            choice_budget: mem_budget / 4,
            deadline: Deadline::none(),
        }
    }
}

impl SweepConfig {
    pub fn with_width_cap(width_cap: usize) -> Self {
        SweepConfig {
            width_cap,
            ..SweepConfig::default()
        }
    }

    /// Checks window width and table memory for an already characterized
    /// instance.
    pub fn check_capacity(&self, report: &WidthReport) -> Result<()> {
        if report.max_width > self.width_cap || report.max_width > 63 {
            return Err(OscmError::WindowTooWide {
                width: report.max_width,
                cap: self.width_cap.min(63),
            });
        }
        let w = report.max_width as u32;
        let table = 8u64.saturating_mul(1u64 << w);
        let halves = 8 * u64::from(w) * ((1u64 << (w / 2)) + (1u64 << (w - w / 2)));
        ensure_fits("interval sweep window", table.saturating_add(halves), self.mem_budget)
    }
}

/// Bytes needed to keep the argmin choices of every open step.
fn choice_bytes(report: &WidthReport, system: &IntervalSystem) -> u64 {
    let mut width = 0usize;
    let mut total = 0u64;
    for (e, &after) in system.events().iter().zip(&report.widths) {
        if e.kind == EventKind::Open {
            total = total.saturating_add(1u64 << width);
        }
        width = after;
    }
    total
}

pub fn sweep_solve_sequential(inst: &BipartiteInstance, cfg: &SweepConfig) -> Result<SolveResult> {
    solve_with(inst, 1, cfg)
}

/// Same result as [`sweep_solve_sequential`]; each layer of every open step
/// is split between `workers` threads.
pub fn sweep_solve_parallel(
    inst: &BipartiteInstance,
    workers: usize,
    cfg: &SweepConfig,
) -> Result<SolveResult> {
    solve_with(inst, workers.max(1), cfg)
}

fn solve_with(inst: &BipartiteInstance, workers: usize, cfg: &SweepConfig) -> Result<SolveResult> {
    let system = build_interval_system(inst);
    let report = characterize_system(&system);
    cfg.check_capacity(&report)?;
    let c = compute_crossing_matrix(inst);

    let keep_all = choice_bytes(&report, &system) <= cfg.choice_budget;
    let record = if keep_all { Record::All } else { Record::Nothing };
    let mut records: HashMap<usize, OpenRecord> = HashMap::new();
    let sink = |rec: OpenRecord| {
        records.insert(rec.event, rec);
    };
    let value = if workers == 1 {
        let mut sweep = Sweep::new(&c, &system, record);
        run_sequential(&mut sweep, None, &cfg.deadline, sink)?;
        sweep.value()
    } else {
        run_parallel(Sweep::new(&c, &system, record), workers, &cfg.deadline, sink)?
    };

    let replay = |event: usize| -> Result<OpenRecord> {
        let mut sweep = Sweep::new(&c, &system, Record::Only(event));
        let mut found = None;
        run_sequential(&mut sweep, Some(event), &cfg.deadline, |rec| found = Some(rec))?;
        Ok(found.expect("replayed step records its choices"))
    };
    let order = reconstruct(&system, |event| match records.remove(&event) {
        Some(rec) => Ok(rec),
        None => replay(event),
    })?;

    let result = SolveResult::verified(inst, order)?;
    assert_eq!(result.crossings, value, "sweep value disagrees with recount");
    Ok(result)
}

/// Walks the events backwards from the full set, peeling off the recorded
/// last vertex of every state created by an open step.
fn reconstruct(
    system: &IntervalSystem,
    mut record_for: impl FnMut(usize) -> Result<OpenRecord>,
) -> Result<Vec<usize>> {
    let n = system.n();
    let mut in_set = vec![false; n];
    let mut reversed = Vec::with_capacity(n);
    for (idx, e) in system.events().iter().enumerate().rev() {
        match e.kind {
            EventKind::Close => in_set[e.vertex] = true,
            EventKind::Open if in_set[e.vertex] => {
                let rec = record_for(idx)?;
                let top = rec.slots.len() - 1;
                loop {
                    let sub = rec
                        .slots
                        .iter()
                        .take(top)
                        .enumerate()
                        .filter(|&(_, &u)| in_set[u])
                        .fold(0usize, |m, (s, _)| m | 1 << s);
                    let u = rec.slots[rec.choices[sub] as usize];
                    reversed.push(u);
                    in_set[u] = false;
                    if u == e.vertex {
                        break;
                    }
                }
            }
            EventKind::Open => {}
        }
    }
    let mut order = system.isolated().to_vec();
    order.extend(reversed.into_iter().rev());
    Ok(order)
}

/// Minimum crossings among the vertices of `set` computed by plain subset DP;
/// used by tests to check sweep states.
#[cfg(test)]
fn subset_optimum(c: &crate::graph::CrossingMatrix, set: &[usize]) -> u64 {
    let k = set.len();
    let mut dp = vec![u64::MAX; 1 << k];
    dp[0] = 0;
    for mask in 1usize..1 << k {
        for (i, &v) in set.iter().enumerate() {
            if mask >> i & 1 == 1 {
                let prev = mask ^ 1 << i;
                let f: u64 = (0..k).filter(|j| prev >> j & 1 == 1).map(|j| c.get(set[j], v)).sum();
                dp[mask] = dp[mask].min(dp[prev] + f);
            }
        }
    }
    dp[(1 << k) - 1]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitmask_dp::{self, DpConfig, DpVariant};
    use crate::graph::{brute_force_solve, generate_random_instance};

    fn cfg() -> SweepConfig {
        SweepConfig {
            mem_budget: 1 << 30,
            choice_budget: 1 << 26,
            ..SweepConfig::default()
        }
    }

    #[test]
    fn matching_has_no_crossings() {
        let inst =
            BipartiteInstance::from_adjacency(6, (0..6).map(|a| vec![5 - a]).collect()).unwrap();
        let r = sweep_solve_sequential(&inst, &cfg()).unwrap();
        assert_eq!(r.crossings, 0);
        assert_eq!(r.permutation.order(), &[5, 4, 3, 2, 1, 0]);
    }

    #[test]
    fn two_by_two() {
        let inst = BipartiteInstance::from_adjacency(2, vec![vec![1], vec![0]]).unwrap();
        for w in [1, 2, 4] {
            let r = sweep_solve_parallel(&inst, w, &cfg()).unwrap();
            assert_eq!(r.crossings, 0);
            assert_eq!(r.permutation.order(), &[1, 0]);
        }
    }

    #[test]
    fn empty_and_isolated_vertices() {
        let inst = BipartiteInstance::from_adjacency(3, vec![vec![], vec![2], vec![], vec![0]])
            .unwrap();
        let r = sweep_solve_sequential(&inst, &cfg()).unwrap();
        assert_eq!(r.crossings, 0);
        assert_eq!(&r.permutation.order()[..2], &[0, 2]);
        let none = BipartiteInstance::from_adjacency(0, vec![]).unwrap();
        assert!(sweep_solve_parallel(&none, 3, &cfg()).unwrap().permutation.is_empty());
    }

    #[test]
    fn agrees_with_brute_force() {
        for seed in 0..50u64 {
            let n = 1 + (seed % 9) as usize;
            let p = [0.2, 0.5, 0.8][(seed % 3) as usize];
            let inst = generate_random_instance(n, 2 + (seed % 8) as usize, p, 500 + seed);
            let opt = brute_force_solve(&inst, 9).unwrap().crossings;
            assert_eq!(sweep_solve_sequential(&inst, &cfg()).unwrap().crossings, opt, "seed {seed}");
            for w in [2, 4] {
                assert_eq!(sweep_solve_parallel(&inst, w, &cfg()).unwrap().crossings, opt);
            }
        }
    }

    #[test]
    fn agrees_with_bitmask_dp() {
        for seed in 0..30u64 {
            let inst = generate_random_instance(12, 15, 0.15 + 0.05 * (seed % 5) as f64, seed);
            let dp = bitmask_dp::solve_sequential(&inst, DpVariant::Mitm, &DpConfig::default())
                .unwrap()
                .crossings;
            assert_eq!(sweep_solve_sequential(&inst, &cfg()).unwrap().crossings, dp);
        }
    }

    #[test]
    fn replay_reconstruction_matches() {
        let tiny = SweepConfig {
            choice_budget: 0,
            ..cfg()
        };
        for seed in 0..10u64 {
            let inst = generate_random_instance(10, 12, 0.3, 900 + seed);
            let stored = sweep_solve_sequential(&inst, &cfg()).unwrap();
            let replayed = sweep_solve_sequential(&inst, &tiny).unwrap();
            assert_eq!(stored, replayed);
            assert_eq!(sweep_solve_parallel(&inst, 3, &tiny).unwrap().crossings, stored.crossings);
        }
    }

    #[test]
    fn window_too_wide() {
        let inst = BipartiteInstance::from_adjacency(3, vec![vec![0, 2]; 5]).unwrap();
        let narrow = SweepConfig {
            width_cap: 4,
            ..cfg()
        };
        match sweep_solve_sequential(&inst, &narrow) {
            Err(OscmError::WindowTooWide { width: 5, cap: 4 }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn deadline_is_honoured() {
        let inst = generate_random_instance(10, 10, 0.5, 3);
        let late = SweepConfig {
            deadline: Deadline::at(std::time::Instant::now()),
            ..cfg()
        };
        assert!(matches!(sweep_solve_sequential(&inst, &late), Err(OscmError::Timeout)));
        assert!(matches!(sweep_solve_parallel(&inst, 2, &late), Err(OscmError::Timeout)));
    }

    #[test]
    fn sweep_states_track_closed_sets() {
        for seed in 0..15u64 {
            let inst = generate_random_instance(9, 10, 0.3, 40 + seed);
            let c = compute_crossing_matrix(&inst);
            let system = build_interval_system(&inst);
            let mut sweep = Sweep::new(&c, &system, Record::Nothing);
            loop {
                let before: Vec<u64> = (0..sweep.window_len()).map(|m| sweep.dp_value(m)).collect();
                let before_slots = sweep.slots().to_vec();
                match sweep.apply_event() {
                    None => break,
                    Some(sweep::Step::Opened { old_width }) => {
                        sweep.fill_all(old_width);
                        sweep.finish_open();
                    }
                    Some(sweep::Step::Closed) => {
                        // Retained states are the old ones containing the closed vertex.
                        let gone = *before_slots.iter().find(|v| !sweep.slots().contains(v)).unwrap();
                        let s = before_slots.iter().position(|&v| v == gone).unwrap();
                        assert_eq!(sweep.window_len() * 2, before.len());
                        for m in 0..sweep.window_len() {
                            let low = (1usize << s) - 1;
                            let old = (m & low) | 1 << s | (m & !low) << 1;
                            assert_eq!(sweep.dp_value(m), before[old]);
                        }
                    }
                }
                let closed: Vec<usize> = (0..9).filter(|&v| sweep.is_closed(v)).collect();
                for &v in sweep.slots() {
                    let direct: u64 = closed.iter().map(|&u| c.get(u, v)).sum();
                    assert_eq!(sweep.fl(v), direct);
                }
                // dp of L alone is the optimum over L.
                assert_eq!(sweep.dp_value(0), subset_optimum(&c, &closed));
            }
        }
    }
}
