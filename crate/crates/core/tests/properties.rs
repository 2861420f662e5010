use proptest::prelude::*;

use oscm_core::graph::{
    brute_force_solve, compute_crossing_matrix, count_crossings, parse_instance_str, parse_solution,
    serialize_instance, serialize_solution, BipartiteInstance, Permutation, SolveResult,
};
use oscm_core::solver::{solve, Algorithm, SolverConfig};
use oscm_core::subexpo::characterize_instance;

fn instance(max_free: usize, max_fixed: usize) -> impl Strategy<Value = BipartiteInstance> {
    (1..=max_fixed).prop_flat_map(move |m| {
        prop::collection::vec(prop::collection::btree_set(0..m, 0..=m), 0..=max_free).prop_map(
            move |sets| {
                let adjacency = sets.into_iter().map(|s| s.into_iter().collect()).collect();
                BipartiteInstance::from_adjacency(m, adjacency).unwrap()
            },
        )
    })
}

fn with_order(max_free: usize) -> impl Strategy<Value = (BipartiteInstance, Vec<usize>)> {
    instance(max_free, 8).prop_flat_map(|inst| {
        let order: Vec<usize> = (0..inst.n_free()).collect();
        (Just(inst), Just(order).prop_shuffle())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn pair_counts_add_up(inst in instance(8, 10)) {
        let c = compute_crossing_matrix(&inst);
        for x in 0..inst.n_free() {
            prop_assert_eq!(c.get(x, x), 0);
            for y in 0..inst.n_free() {
                if x == y {
                    continue;
                }
                let distinct = inst
                    .neighbors(x)
                    .iter()
                    .flat_map(|&b| inst.neighbors(y).iter().map(move |&d| (b, d)))
                    .filter(|(b, d)| b != d)
                    .count() as u64;
                prop_assert_eq!(c.get(x, y) + c.get(y, x), distinct);
            }
        }
    }

    #[test]
    fn counting_matches_matrix_sum((inst, order) in with_order(9)) {
        let c = compute_crossing_matrix(&inst);
        let p = Permutation::from_order(order.clone()).unwrap();
        prop_assert_eq!(count_crossings(&inst, &p).unwrap(), c.cost_of_order(&order));
    }

    #[test]
    fn instance_text_round_trips(inst in instance(12, 12)) {
        let text = serialize_instance(&inst);
        prop_assert_eq!(parse_instance_str(&text).unwrap(), inst);
    }

    #[test]
    fn solution_text_round_trips((inst, order) in with_order(9)) {
        let result = SolveResult::verified(&inst, order.clone()).unwrap();
        let text = serialize_solution(&inst, &result);
        let back = parse_solution(&inst, text.as_bytes()).unwrap();
        prop_assert_eq!(back.order(), &order[..]);
    }

    #[test]
    fn solvers_find_the_optimum(inst in instance(7, 7), threads in 1usize..5) {
        let opt = brute_force_solve(&inst, 9).unwrap().crossings;
        let cfg = SolverConfig { threads, mem_budget: 1 << 28, ..SolverConfig::default() };
        for algo in Algorithm::CONCRETE {
            let r = solve(&inst, algo, &cfg).unwrap();
            prop_assert_eq!(r.crossings, opt, "{}", algo);
            prop_assert_eq!(count_crossings(&inst, &r.permutation).unwrap(), opt);
        }
    }

    #[test]
    fn window_never_exceeds_free_layer(inst in instance(12, 12)) {
        let report = characterize_instance(&inst);
        prop_assert!(report.max_width <= inst.n_free() - report.isolated);
    }
}

#[test]
fn brute_force_is_a_lower_envelope() {
    let inst = oscm_core::graph::generate_random_instance(6, 6, 0.5, 11);
    let best = brute_force_solve(&inst, 9).unwrap();
    let mut order: Vec<usize> = (0..6).collect();
    let c = compute_crossing_matrix(&inst);
    // Heap's algorithm over all 720 orders.
    fn visit(k: usize, order: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if k <= 1 {
            f(order);
            return;
        }
        for i in 0..k {
            visit(k - 1, order, f);
            let j = if k.is_multiple_of(2) { i } else { 0 };
            order.swap(j, k - 1);
        }
    }
    let mut seen = 0;
    visit(6, &mut order, &mut |o| {
        seen += 1;
        assert!(best.crossings <= c.cost_of_order(o));
    });
    assert_eq!(seen, 720);
}
