use hrap_core::bnb::solve_milp;
use hrap_core::cost::{cost_table, Hyperparams};
use hrap_core::domain::partition_assignable;
use hrap_core::lp::{solve_lp, LpStatus};
use hrap_core::metrics::{greedy_assignment, random_assignment, MetricsBlock};
use hrap_core::model::{build_balance_model, build_cost_model, extract_assignment};
use hrap_core::oracle::{brute_force, OracleMode};
use hrap_core::synth::generate_synthetic;
use hrap_core::{MilpStatus, ProblemInstance, SolveConfig};
use proptest::prelude::*;

fn exact() -> SolveConfig {
    SolveConfig {
        gap_tolerance: 0.0,
        ..Default::default()
    }
}

fn small_instance() -> impl Strategy<Value = ProblemInstance> {
    (1usize..=5, 1usize..=8, 1usize..=4, any::<u64>()).prop_map(|(n, m, k, seed)| {
        generate_synthetic(n, m, k, seed).expect("valid sizes")
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn balance_matches_brute_force(inst in small_instance()) {
        let model = build_balance_model(&inst);
        let milp = solve_milp(&model, &exact());
        let oracle = brute_force(&inst, OracleMode::Balance).unwrap();
        prop_assert_eq!(milp.status, MilpStatus::Optimal);
        prop_assert!((milp.objective - oracle.objective).abs() <= 1e-9,
            "milp {} oracle {}", milp.objective, oracle.objective);
        milp.assignment.check_feasible(&inst).unwrap();
        prop_assert!(milp.root_bound <= milp.best_bound + 1e-9);
        prop_assert!(milp.best_bound <= milp.objective + 1e-9);
    }

    #[test]
    fn cost_matches_brute_force(inst in small_instance(), lambda in 0.0f64..=1.0, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (a, b) = (a.min(1.0 - 1e-9), b * (1.0 - a));
        let hp = Hyperparams::new(lambda, a, b, 1.0 - a - b).unwrap();
        let costs = cost_table(&inst, &hp).unwrap();
        let model = build_cost_model(&inst, &hp, &costs).unwrap();
        let milp = solve_milp(&model, &exact());
        let oracle = brute_force(&inst, OracleMode::Cost(hp)).unwrap();
        prop_assert!((milp.objective - oracle.objective).abs() <= 1e-9,
            "milp {} oracle {}", milp.objective, oracle.objective);
    }

    #[test]
    fn lp_relaxation_bounds_the_optimum(inst in small_instance()) {
        let model = build_balance_model(&inst);
        let lp = solve_lp(&model);
        prop_assert_eq!(lp.status, LpStatus::Optimal);
        prop_assert!(model.max_violation(&lp.values) <= 1e-7);
        let oracle = brute_force(&inst, OracleMode::Balance).unwrap();
        prop_assert!(lp.objective <= oracle.objective + 1e-9);
    }

    #[test]
    fn solver_beats_baselines(inst in small_instance(), seed in any::<u64>()) {
        let model = build_balance_model(&inst);
        let milp = solve_milp(&model, &exact());
        let greedy = MetricsBlock::for_assignment(&greedy_assignment(&inst), &inst, false).unwrap();
        let random = MetricsBlock::for_assignment(&random_assignment(&inst, seed), &inst, false).unwrap();
        prop_assert!(milp.objective <= greedy.objective + 1e-9);
        prop_assert!(milp.objective <= random.objective + 1e-9);
        // deviations of the optimum match the metrics view of the same assignment
        let own = MetricsBlock::for_assignment(&milp.assignment, &inst, false).unwrap();
        prop_assert!((own.max_above - milp.solution[model.var_index.dev_plus()]).abs() <= 1e-7);
        prop_assert!((own.max_below - milp.solution[model.var_index.dev_minus()]).abs() <= 1e-7);
    }

    #[test]
    fn duration_scaling_scales_the_optimum(inst in small_instance(), c in 0.1f64..10.0) {
        let base = solve_milp(&build_balance_model(&inst), &exact()).objective;
        let scaled = inst.scale_durations(c).unwrap();
        let obj = solve_milp(&build_balance_model(&scaled), &exact()).objective;
        prop_assert!((obj - c * base).abs() <= 1e-9 * (1.0 + c * base));
    }
}

#[test]
fn solves_are_deterministic() {
    let inst = generate_synthetic(8, 30, 4, 11).unwrap();
    let model = build_balance_model(&inst);
    let cfg = SolveConfig {
        node_limit: Some(2000),
        ..Default::default()
    };
    let a = solve_milp(&model, &cfg);
    let b = solve_milp(&model, &cfg);
    assert_eq!(a.assignment, b.assignment);
    assert_eq!(a.nodes, b.nodes);
    assert_eq!(a.objective, b.objective);
}

#[test]
fn extracted_assignment_covers_assignable_tasks() {
    let inst = generate_synthetic(5, 12, 6, 3).unwrap();
    let model = build_balance_model(&inst);
    let r = solve_milp(&model, &SolveConfig::default());
    let a = extract_assignment(&model, &r.solution).unwrap();
    a.check_feasible(&inst).unwrap();
    let p = partition_assignable(&inst);
    assert_eq!(a.pairs.len(), p.assignable.len());
    assert_eq!(a.unassigned, p.unassigned);
}
