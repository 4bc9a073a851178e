mod common;

use mlrcpf::optimizer::{
    evaluate, local_search_optimize, parse_rho_grid, sensitivity_sweep, SolverConfig, SweepMode,
};
use mlrcpf::uncertainty::{generate_scenarios, ScenarioSpec};
use mlrcpf::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn config() -> SolverConfig {
    SolverConfig {
        seed: 4,
        restarts: 2,
        ..SolverConfig::default()
    }
    .with_iterations(500)
}

#[test]
fn zero_radius_alone_is_the_expectation() {
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    let inst = common::random_instance(&mut rng, 3, 4, 3);
    let set = generate_scenarios(&inst, &ScenarioSpec::with_count(8), 2).unwrap();
    let plan = local_search_optimize(&inst, &set, &config()).unwrap().plan;
    let points = sensitivity_sweep(&inst, &set, SweepMode::Fixed(&plan), &[0.0]).unwrap();
    assert_eq!(points.len(), 1);
    let m = evaluate(&plan, &inst, &set, 0.0).unwrap();
    assert_eq!(points[0].worst_case_profit, m.total_expected_profit);
}

#[test]
fn fixed_plan_curve_is_non_increasing() {
    let mut rng = ChaCha8Rng::seed_from_u64(62);
    let grid = parse_rho_grid("0, 0.05, 0.1, 0.2").unwrap();
    for _ in 0..20 {
        let inst = common::random_instance(&mut rng, 3, 4, 3);
        let set = generate_scenarios(&inst, &ScenarioSpec::with_count(10), rng.gen()).unwrap();
        let plan = local_search_optimize(&inst, &set, &config()).unwrap().plan;
        let points = sensitivity_sweep(&inst, &set, SweepMode::Fixed(&plan), &grid).unwrap();
        assert!(points
            .windows(2)
            .all(|w| w[1].worst_case_profit <= w[0].worst_case_profit));
    }
}

#[test]
fn resolving_never_loses_to_the_fixed_plan() {
    let mut rng = ChaCha8Rng::seed_from_u64(63);
    let mut inst = common::random_instance(&mut rng, 3, 3, 3);
    inst.rotation_stress_penalty = 0.0;
    let set = generate_scenarios(&inst, &ScenarioSpec::with_count(6), 5).unwrap();
    let cfg = config();
    let plan = local_search_optimize(&inst, &set, &cfg).unwrap().plan;
    let grid = [0.0, 0.05, 0.2];
    let fixed = sensitivity_sweep(&inst, &set, SweepMode::Fixed(&plan), &grid).unwrap();
    let resolved = sensitivity_sweep(
        &inst,
        &set,
        SweepMode::Resolve {
            initial: &plan,
            config: &cfg,
        },
        &grid,
    )
    .unwrap();
    // The annealer keeps its best state, which starts at `plan`; with no
    // stress penalty its objective is the worst-case profit itself.
    for (f, r) in fixed.iter().zip(&resolved) {
        assert!(r.worst_case_profit >= f.worst_case_profit - 1e-9);
    }
    assert_eq!(resolved.len(), 3);
}

#[test]
fn bad_grids_are_rejected() {
    for text in ["", "0,x", "0.1,0.05", "-0.1", "0,inf"] {
        assert!(
            matches!(parse_rho_grid(text), Err(Error::InvalidRhoGrid(_))),
            "{text}"
        );
    }
}
