//! Bounded search tree over pairwise precedences.
//!
//! Only pairs whose two orders cost differently are branched on. Costs are
//! tracked relative to the pairwise lower bound `LB = sum min(C_ij, C_ji)`, so
//! a run with budget `k` finds any solution with at most `LB + k` crossings.
//! The budget starts at 0, then 1, and doubles until a solution appears.

mod pool;
mod precedence;
mod search;

pub use pool::parallel_search;
pub use precedence::{topological_sort, transitive_closure, PrecedenceMatrix};
pub use search::{
    build_root_instance, search_sequential, BestSolution, ResidualCosts, SearchContext,
    SearchInstance,
};

use crate::error::{OscmError, Result};
use crate::graph::{compute_crossing_matrix, BipartiteInstance, SolveResult};
use crate::limits::Deadline;

pub const DEFAULT_MAX_K: u64 = 1 << 20;

#[derive(Debug, Clone)]
pub struct GoldenConfig {
    /// Largest budget tried before giving up.
    pub max_k: u64,
    pub deadline: Deadline,
}

impl Default for GoldenConfig {
    fn default() -> Self {
        GoldenConfig {
            max_k: DEFAULT_MAX_K,
            deadline: Deadline::none(),
        }
    }
}

/// Budgets tried in order: 0, 1, 2, 4, ... and finally `max_k` itself.
pub fn budget_schedule(max_k: u64) -> Vec<u64> {
    let mut ks = vec![0];
    let mut k = 1u64;
    while k < max_k {
        ks.push(k);
        k = k.saturating_mul(2);
    }
    if max_k > 0 {
        ks.push(max_k);
    }
    ks
}

/// Runs one search with budget `k`. `Ok(None)` means no solution within
/// `LB + k`.
pub fn search_with_budget(
    ctx: &SearchContext,
    k: u64,
    threads: usize,
    deadline: &Deadline,
) -> Result<Option<(Vec<usize>, u64)>> {
    let root = match build_root_instance(ctx, k) {
        Ok(root) => root,
        Err(OscmError::Cycle) => return Ok(None),
        Err(e) => return Err(e),
    };
    let best = if threads <= 1 {
        let mut best = BestSolution::default();
        search_sequential(root, ctx, &mut best, deadline)?;
        best
    } else {
        parallel_search(root, ctx, threads, deadline)?
    };
    if !best.found() {
        return Ok(None);
    }
    let d = best.precedence.as_ref().expect("found solution keeps its matrix");
    let order = topological_sort(d)?.into_order();
    let crossings = ctx.residual().lower_bound() + (k - best.budget as u64);
    Ok(Some((order, crossings)))
}

pub fn solve(inst: &BipartiteInstance, threads: usize, cfg: &GoldenConfig) -> Result<SolveResult> {
    let c = compute_crossing_matrix(inst);
    let residual = ResidualCosts::new(&c);
    let ctx = SearchContext::new(&c, &residual);
    for k in budget_schedule(cfg.max_k) {
        cfg.deadline.check()?;
        if let Some((order, crossings)) = search_with_budget(&ctx, k, threads, &cfg.deadline)? {
            let result = SolveResult::verified(inst, order)?;
            assert_eq!(
                result.crossings, crossings,
                "search bookkeeping disagrees with the recount"
            );
            return Ok(result);
        }
    }
    Err(OscmError::NotFound { max_k: cfg.max_k })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{brute_force_solve, generate_random_instance, CrossingMatrix};

    fn ctx_parts(c: &CrossingMatrix) -> ResidualCosts {
        ResidualCosts::new(c)
    }

    #[test]
    fn schedule() {
        assert_eq!(budget_schedule(0), vec![0]);
        assert_eq!(budget_schedule(1), vec![0, 1]);
        assert_eq!(budget_schedule(5), vec![0, 1, 2, 4, 5]);
        assert_eq!(budget_schedule(8), vec![0, 1, 2, 4, 8]);
    }

    #[test]
    fn residuals_have_a_zero_side() {
        let inst = generate_random_instance(9, 9, 0.5, 4);
        let c = compute_crossing_matrix(&inst);
        let r = ctx_parts(&c);
        for i in 0..9 {
            for j in 0..9 {
                assert_eq!(r.get(i, j).min(r.get(j, i)), 0);
            }
        }
    }

    #[test]
    fn find_choice_cases() {
        // Unequal pair (0, 1), neutral pair (0, 2) and (1, 2).
        let c = CrossingMatrix::from_entries(3, vec![0, 2, 1, 1, 0, 3, 1, 3, 0]).unwrap();
        let r = ctx_parts(&c);
        let ctx = SearchContext::new(&c, &r);
        let mut root = build_root_instance(&ctx, 5).unwrap();
        assert_eq!(root.find_choice(&ctx), Some((0, 1)));
        let mut done = root.commit(1, 0, &ctx);
        assert_eq!(done.find_choice(&ctx), None);

        let neutral = CrossingMatrix::from_entries(3, vec![0, 1, 1, 1, 0, 1, 1, 1, 0]).unwrap();
        let r = ctx_parts(&neutral);
        let ctx = SearchContext::new(&neutral, &r);
        let mut root = build_root_instance(&ctx, 0).unwrap();
        assert_eq!(root.precedence().count(), 0);
        assert_eq!(root.budget(), 0);
        assert_eq!(root.find_choice(&ctx), None);
    }

    #[test]
    fn commit_examples() {
        let c = CrossingMatrix::from_entries(2, vec![0, 1, 1, 0]).unwrap();
        let r = ctx_parts(&c);
        let ctx = SearchContext::new(&c, &r);
        let root = build_root_instance(&ctx, 3).unwrap();
        let child = root.commit(0, 1, &ctx);
        assert!(child.precedence().get(0, 1));
        assert_eq!(child.budget(), 3);
        assert_eq!(root.precedence().count(), 0);

        // C'_12 = 2, C'_02 = 5, C'_01 = 0 (forced 0 -> 1).
        #[rustfmt::skip]
        let c = CrossingMatrix::from_entries(3, vec![
            0, 0, 7,
            4, 0, 3,
            2, 1, 0,
        ]).unwrap();
        let r = ctx_parts(&c);
        let ctx = SearchContext::new(&c, &r);
        let root = build_root_instance(&ctx, 10).unwrap();
        assert!(root.precedence().get(0, 1));
        assert_eq!(root.budget(), 10);
        let child = root.commit(1, 2, &ctx);
        assert!(child.precedence().get(0, 2));
        assert_eq!(child.budget(), 10 - 2 - 5);
        assert_eq!(10 - child.budget() as u64, child.committed_cost(&r));
    }

    #[test]
    fn commits_stay_antisymmetric_and_charged() {
        for seed in 0..40u64 {
            let inst = generate_random_instance(8, 6, 0.5, seed);
            let c = compute_crossing_matrix(&inst);
            let r = ctx_parts(&c);
            let ctx = SearchContext::new(&c, &r);
            let k = 1000;
            let mut node = build_root_instance(&ctx, k).unwrap();
            let mut flip = seed;
            while let Some((a, b)) = node.find_choice(&ctx) {
                node = if flip & 1 == 0 {
                    node.commit(a, b, &ctx)
                } else {
                    node.commit(b, a, &ctx)
                };
                flip >>= 1;
                let d = node.precedence();
                for i in 0..8 {
                    for j in 0..8 {
                        assert!(!(d.get(i, j) && d.get(j, i)));
                    }
                }
                let mut closed = d.clone();
                transitive_closure(&mut closed).unwrap();
                assert_eq!(&closed, d);
                assert_eq!(k - node.budget() as u64, node.committed_cost(&r));
            }
            // Leaf value matches the recount of its topological order.
            let order = topological_sort(node.precedence()).unwrap();
            let leaf = r.lower_bound() + (k - node.budget() as u64);
            assert_eq!(crate::graph::count_crossings(&inst, &order).unwrap(), leaf);
        }
    }

    #[test]
    fn root_forcing_rules() {
        let c = CrossingMatrix::from_entries(2, vec![0, 0, 3, 0]).unwrap();
        let r = ctx_parts(&c);
        let ctx = SearchContext::new(&c, &r);
        let root = build_root_instance(&ctx, 100).unwrap();
        assert!(root.precedence().get(0, 1));

        // Cyclic preferences 0<1, 1<2, 2<0 all forced at k = 0.
        #[rustfmt::skip]
        let c = CrossingMatrix::from_entries(3, vec![
            0, 1, 2,
            2, 0, 1,
            1, 2, 0,
        ]).unwrap();
        let r = ctx_parts(&c);
        let ctx = SearchContext::new(&c, &r);
        assert!(matches!(build_root_instance(&ctx, 0), Err(OscmError::Cycle)));
        let best = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]]
            .iter()
            .map(|o| c.cost_of_order(o))
            .min()
            .unwrap();
        assert!(best > r.lower_bound());
        assert!(build_root_instance(&ctx, 1).is_ok());
    }

    #[test]
    fn solves_small_instances_exactly() {
        let two = BipartiteInstance::from_adjacency(2, vec![vec![1], vec![0]]).unwrap();
        let r = solve(&two, 1, &GoldenConfig::default()).unwrap();
        assert_eq!(r.crossings, 0);
        assert_eq!(r.permutation.order(), &[1, 0]);

        for seed in 0..60u64 {
            let n = 1 + (seed % 9) as usize;
            let p = [0.2, 0.5, 0.8][(seed % 3) as usize];
            let inst = generate_random_instance(n, 3 + (seed % 6) as usize, p, 1000 + seed);
            let opt = brute_force_solve(&inst, 9).unwrap().crossings;
            let c = compute_crossing_matrix(&inst);
            let res = ResidualCosts::new(&c);
            assert!(res.lower_bound() <= opt);
            let ctx = SearchContext::new(&c, &res);
            let gap = opt - res.lower_bound();
            let (_, found) = search_with_budget(&ctx, gap, 1, &Deadline::none()).unwrap().unwrap();
            assert_eq!(found, opt);
            if gap > 0 {
                assert!(search_with_budget(&ctx, gap - 1, 1, &Deadline::none()).unwrap().is_none());
            }
            for threads in [1, 2, 4, 8] {
                assert_eq!(solve(&inst, threads, &GoldenConfig::default()).unwrap().crossings, opt);
            }
        }
    }

    #[test]
    fn parallel_matches_sequential_budget() {
        for seed in 0..10u64 {
            let inst = generate_random_instance(14, 10, 0.4, 50 + seed);
            let c = compute_crossing_matrix(&inst);
            let r = ResidualCosts::new(&c);
            let ctx = SearchContext::new(&c, &r);
            let k = 64;
            let Ok(root) = build_root_instance(&ctx, k) else { continue };
            let mut seq = BestSolution::default();
            search_sequential(root.clone(), &ctx, &mut seq, &Deadline::none()).unwrap();
            for workers in [1, 2, 4, 8] {
                let par = parallel_search(root.clone(), &ctx, workers, &Deadline::none()).unwrap();
                assert_eq!(par.budget, seq.budget);
            }
        }
    }

    #[test]
    fn leaf_root_terminates_in_parallel() {
        let inst = BipartiteInstance::from_adjacency(3, vec![vec![0], vec![1], vec![2]]).unwrap();
        for threads in [1, 4, 8] {
            let r = solve(&inst, threads, &GoldenConfig::default()).unwrap();
            assert_eq!(r.crossings, 0);
            assert_eq!(r.permutation.order(), &[0, 1, 2]);
        }
    }

    #[test]
    fn max_k_zero_reports_not_found() {
        // Optimum 59, pairwise bound 58.
        let inst = generate_random_instance(8, 8, 0.3, 809);
        let opt = brute_force_solve(&inst, 9).unwrap().crossings;
        let lb = ResidualCosts::new(&compute_crossing_matrix(&inst)).lower_bound();
        assert_eq!((opt, lb), (59, 58));
        let cfg = GoldenConfig {
            max_k: 0,
            ..GoldenConfig::default()
        };
        assert!(matches!(solve(&inst, 1, &cfg), Err(OscmError::NotFound { max_k: 0 })));
        assert!(matches!(solve(&inst, 4, &cfg), Err(OscmError::NotFound { max_k: 0 })));
        assert_eq!(solve(&inst, 1, &GoldenConfig { max_k: 1, ..cfg }).unwrap().crossings, 59);
    }
}
