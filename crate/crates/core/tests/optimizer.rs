mod common;

use mlrcpf::optimizer::{
    baseline_deterministic, baseline_robust, brute_force_optimize, brute_force_with_bound,
    evaluate, evaluate_in, feasible, legume_window_violations, local_search_from,
    local_search_optimize, nominal_profit, PlanViolation, SolverConfig,
};
use mlrcpf::spatial::{
    admissible_actions, build_adjacency, capacity_violation, feasible_crops, water_violation,
};
use mlrcpf::temporal::{rotation_legal, simulate};
use mlrcpf::uncertainty::{
    generate_scenarios, scenario_breaches, ScenarioBreach, ScenarioSet, ScenarioSpec,
    WassersteinBall,
};
use mlrcpf::{CropCategory, Error, LandType, Plan, PlanningInstance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn quick(seed: u64) -> SolverConfig {
    SolverConfig {
        seed,
        restarts: 2,
        ..SolverConfig::default()
    }
    .with_iterations(400)
}

fn loose_water(inst: &mut PlanningInstance) {
    inst.water_limits = vec![1e9; inst.horizon];
}

#[test]
fn oracle_picks_the_more_profitable_crop() {
    use LandType::DryFlat;
    let mut a = common::crop("a", CropCategory::Cereal, &[DryFlat]);
    let mut b = common::crop("b", CropCategory::Cereal, &[DryFlat]);
    for (c, price) in [(&mut a, 5.0), (&mut b, 7.0)] {
        c.baseline_yield = 1.0;
        c.baseline_price = price;
        c.baseline_cost = 0.0;
    }
    let mut u = common::unit("u", DryFlat, &[(0, 0)]);
    u.area = 1.0;
    let inst = common::instance(vec![u], vec![a, b], 1);
    let sol = brute_force_optimize(&inst, &ScenarioSet::nominal(&inst), 0.0).unwrap();
    assert_eq!(sol.plan.get(0, 0), Some(1));
    assert_eq!(sol.objective, 7.0);
}

#[test]
fn oracle_never_repeats_within_the_replant_interval() {
    use LandType::DryFlat;
    let units = vec![
        common::unit("a", DryFlat, &[(0, 0)]),
        common::unit("b", DryFlat, &[(0, 1)]),
    ];
    let mut wheat = common::crop("wheat", CropCategory::Cereal, &[DryFlat]);
    wheat.baseline_price = 50.0;
    let inst = common::instance(units, vec![wheat], 2);
    let sol = brute_force_optimize(&inst, &ScenarioSet::nominal(&inst), 0.0).unwrap();
    for u in 0..2 {
        assert!(!(sol.plan.get(u, 0) == Some(0) && sol.plan.get(u, 1) == Some(0)));
        assert!(sol.plan.unit_row(u).contains(&Some(0)));
    }
}

#[test]
fn oracle_refuses_large_instances() {
    let inst = mlrcpf::io::generate_case_study(1);
    let set = ScenarioSet::nominal(&inst);
    assert!(matches!(
        brute_force_optimize(&inst, &set, 0.0),
        Err(Error::SearchTooLarge { .. })
    ));
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let tiny = common::random_instance(&mut rng, 3, 3, 3);
    let set = ScenarioSet::nominal(&tiny);
    assert!(matches!(
        brute_force_with_bound(&tiny, &set, 0.0, 10.0),
        Err(Error::SearchTooLarge { bound, .. }) if bound == 10.0
    ));
}

/// Every plan of the tiny instance, filtered by the feasibility checker.
fn naive_optimum(inst: &PlanningInstance, set: &ScenarioSet, rho: f64) -> f64 {
    let admissible = admissible_actions(inst, 0);
    let ball = WassersteinBall::for_set(inst, set, rho).unwrap();
    let adjacency = build_adjacency(&inst.units).unwrap();
    let slots: Vec<(usize, usize)> = (0..inst.units.len())
        .flat_map(|u| (0..inst.horizon).map(move |t| (u, t)))
        .collect();
    let radix: Vec<usize> = slots
        .iter()
        .map(|&(u, _)| admissible[u].len() + 1)
        .collect();
    let mut digits = vec![0usize; slots.len()];
    let mut best = f64::NEG_INFINITY;
    loop {
        let mut plan = Plan::for_instance(inst);
        for (k, &(u, t)) in slots.iter().enumerate() {
            plan.set(u, t, digits[k].checked_sub(1).map(|i| admissible[u][i]));
        }
        if feasible(&plan, inst, set).is_empty() {
            let worst = evaluate_in(&plan, inst, set, &ball)
                .unwrap()
                .worst_case_profit;
            let stress = simulate(&plan, inst, &adjacency).total_stress();
            best = best.max(worst - inst.rotation_stress_penalty * stress);
        }
        let mut k = 0;
        loop {
            if k == digits.len() {
                return best;
            }
            digits[k] += 1;
            if digits[k] < radix[k] {
                break;
            }
            digits[k] = 0;
            k += 1;
        }
    }
}

#[test]
fn oracle_matches_plain_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for case in 0..12 {
        let (units, horizon) = if case % 2 == 0 { (3, 2) } else { (2, 3) };
        let inst = common::random_instance(&mut rng, units, horizon, 3);
        let set = generate_scenarios(&inst, &ScenarioSpec::with_count(4), rng.gen()).unwrap();
        let sol = brute_force_optimize(&inst, &set, 0.05).unwrap();
        let want = naive_optimum(&inst, &set, 0.05);
        assert!(
            (sol.objective - want).abs() <= 1e-9 * want.abs().max(1.0),
            "case {case}: {} vs {want}",
            sol.objective
        );
        assert!(feasible(&sol.plan, &inst, &set).is_empty());
    }
}

#[test]
fn zero_iterations_returns_the_initial_plan() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let mut inst = common::random_instance(&mut rng, 3, 4, 3);
    loose_water(&mut inst);
    let set = generate_scenarios(&inst, &ScenarioSpec::with_count(3), 5).unwrap();
    let mut initial = Plan::for_instance(&inst);
    let options = admissible_actions(&inst, 0);
    for (u, opts) in options.iter().enumerate() {
        if let Some(&c) = opts.first() {
            initial.set(u, 0, Some(c));
        }
    }
    assert!(feasible(&initial, &inst, &set).is_empty());
    let config = quick(1).with_iterations(0);
    let out = local_search_from(&inst, &set, &config, &initial).unwrap();
    assert_eq!(out.plan, initial);
}

#[test]
fn solver_output_is_rotation_legal() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for case in 0..200 {
        let (units, horizon) = (rng.gen_range(1..=4), rng.gen_range(1..=5));
        let inst = common::random_instance(&mut rng, units, horizon, 3);
        let set = generate_scenarios(&inst, &ScenarioSpec::with_count(3), rng.gen()).unwrap();
        let out = local_search_optimize(&inst, &set, &quick(case)).unwrap();
        assert!(rotation_legal(&out.plan, &inst).is_empty());
        assert!(feasible(&out.plan, &inst, &set).is_empty());
    }
}

#[test]
fn same_seed_same_plan() {
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    let inst = common::random_instance(&mut rng, 4, 5, 4);
    let set = generate_scenarios(&inst, &ScenarioSpec::with_count(6), 3).unwrap();
    let a = local_search_optimize(&inst, &set, &quick(9)).unwrap();
    let b = local_search_optimize(&inst, &set, &quick(9)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn dominant_crop_gives_monoculture() {
    use LandType::*;
    let units = (0..4)
        .map(|i| common::unit(&format!("u{i}"), DryFlat, &[(0, i)]))
        .collect();
    let mut best = common::crop("best", CropCategory::Cereal, &[DryFlat]);
    best.baseline_price = 10.0;
    best.replant_interval = 1;
    let other = common::crop("other", CropCategory::Cereal, &[DryFlat]);
    let legume = common::crop("bean", CropCategory::Legume, &[DryFlat]);
    let inst = common::instance(units, vec![best, other, legume], 6);
    let plan = baseline_deterministic(&inst, &quick(2)).unwrap();
    assert!((0..4).all(|u| plan.unit_row(u).iter().all(|&c| c == Some(0))));

    // With a replant interval of two the best crop fills every other period.
    let mut alternating = inst.clone();
    alternating.crops[0].replant_interval = 2;
    let plan = baseline_deterministic(&alternating, &quick(2)).unwrap();
    for u in 0..4 {
        assert_eq!(
            plan.unit_row(u).iter().filter(|&&c| c == Some(0)).count(),
            3
        );
    }
}

#[test]
fn deterministic_baseline_has_the_highest_nominal_profit() {
    let mut rng = ChaCha8Rng::seed_from_u64(35);
    for case in 0..10 {
        let mut inst = common::random_instance(&mut rng, 3, 3, 3);
        loose_water(&mut inst);
        let set = generate_scenarios(&inst, &ScenarioSpec::with_count(4), rng.gen()).unwrap();
        let config = SolverConfig {
            restarts: 10,
            ..quick(case)
        }
        .with_iterations(2000);
        let det = baseline_deterministic(&inst, &config).unwrap();
        let rob = baseline_robust(&inst, &set, &config).unwrap();
        let prop = local_search_optimize(&inst, &set, &config).unwrap().plan;
        let flat = inst.without_interactions();
        let d = nominal_profit(&det, &flat).unwrap();
        for other in [&rob, &prop] {
            assert!(d >= nominal_profit(other, &flat).unwrap() - 1e-9 * d.abs().max(1.0));
        }
    }
}

#[test]
fn empty_plan_has_zero_metrics() {
    let mut rng = ChaCha8Rng::seed_from_u64(36);
    let inst = common::random_instance(&mut rng, 3, 4, 3);
    let set = generate_scenarios(&inst, &ScenarioSpec::with_count(5), 1).unwrap();
    let m = evaluate(&Plan::for_instance(&inst), &inst, &set, 0.05).unwrap();
    assert_eq!(m, mlrcpf::optimizer::PlanMetrics::ZERO);
}

/// Metrics recomputed from raw per-scenario tallies written out in full.
#[test]
fn metrics_match_an_independent_tally() {
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    for _ in 0..20 {
        let mut inst = common::random_instance(&mut rng, 4, 4, 3);
        loose_water(&mut inst);
        let spec = ScenarioSpec {
            unit_noise: 0.05,
            ..ScenarioSpec::with_count(6)
        };
        let set = generate_scenarios(&inst, &spec, rng.gen()).unwrap();
        let plan = mlrcpf::optimizer::local_search_optimize(&inst, &set, &quick(3))
            .unwrap()
            .plan;
        let adjacency = build_adjacency(&inst.units).unwrap();

        let years = inst.horizon.div_ceil(inst.periods_per_year);
        let mut annual = vec![vec![0.0; years]; set.len()];
        for (k, s) in set.scenarios.iter().enumerate() {
            for t in 0..inst.horizon {
                for u in 0..inst.units.len() {
                    let Some(c) = plan.get(u, t) else { continue };
                    let unit = &inst.units[u];
                    let crop = &inst.crops[c];
                    let eta = common::eta_full_sum(&plan, &inst, &adjacency, u, t);
                    let gain = 1.0 + inst.interaction_yield_gain * eta.clamp(-0.5, 0.5);
                    let area = crop.area_per_planting.unwrap_or(unit.area);
                    let y = crop.baseline_yield
                        * unit.productivity_factor
                        * s.yield_factor[c * inst.horizon + t]
                        * s.unit_factor[u]
                        * gain;
                    annual[k][t / inst.periods_per_year] +=
                        s.price[c * inst.horizon + t] * y * area
                            - s.cost[c * inst.horizon + t] * area;
                }
            }
        }
        let p = set.weights();
        let totals: Vec<f64> = annual.iter().map(|a| a.iter().sum()).collect();
        let expected: f64 = p.iter().zip(&totals).map(|(w, v)| w * v).sum();
        let mean_year = expected / years as f64;
        let var: f64 = annual
            .iter()
            .zip(&p)
            .map(|(a, w)| w * a.iter().map(|x| (x - mean_year).powi(2)).sum::<f64>() / years as f64)
            .sum();
        let ball = WassersteinBall::for_set(&inst, &set, 0.05).unwrap();
        let rows: Vec<Vec<f64>> = (0..set.len())
            .map(|i| (0..set.len()).map(|j| ball.distances().get(i, j)).collect())
            .collect();
        let worst = common::dual_worst_case(&totals, &p, &rows, 0.05);
        let legumes = plan
            .plantings()
            .filter(|&(_, _, c)| inst.crops[c].is_legume())
            .count();

        let m = evaluate(&plan, &inst, &set, 0.05).unwrap();
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0);
        assert!(close(m.total_expected_profit, expected));
        assert!(close(m.volatility, var.sqrt()));
        assert!(close(m.worst_case_profit, worst));
        assert!(m.worst_case_profit <= m.total_expected_profit + 1e-9);
        let ratio = if plan.planting_count() == 0 {
            0.0
        } else {
            legumes as f64 / plan.planting_count() as f64
        };
        assert_eq!(m.legume_ratio, ratio);
    }
}

#[test]
fn one_scenario_volatility_is_over_years() {
    use LandType::DryFlat;
    let units = vec![common::unit("a", DryFlat, &[(0, 0)])];
    let crops = vec![
        common::crop("wheat", CropCategory::Cereal, &[DryFlat]),
        common::crop("oats", CropCategory::Cereal, &[DryFlat]),
    ];
    let mut inst = common::instance(units, crops, 4);
    inst.crops[1].baseline_price = 3.0;
    let mut plan = Plan::for_instance(&inst);
    // Year 0 earns 900 + 1500, year 1 earns 900 only.
    plan.set(0, 0, Some(0));
    plan.set(0, 1, Some(1));
    plan.set(0, 2, Some(0));
    let set = ScenarioSet::nominal(&inst);
    let m = evaluate(&plan, &inst, &set, 0.0).unwrap();
    assert_eq!(m.total_expected_profit, 3300.0);
    assert_eq!(m.worst_case_profit, m.total_expected_profit);
    assert_eq!(m.volatility, 750.0);
}

/// The feasibility report is the concatenation of the individual checks.
#[test]
fn feasibility_is_the_union_of_the_checks() {
    let mut rng = ChaCha8Rng::seed_from_u64(38);
    for _ in 0..200 {
        let mut inst = common::random_instance(&mut rng, 4, 5, 4);
        if rng.gen_bool(0.3) {
            inst.legume_window = Some(rng.gen_range(1..=3));
        }
        let mut set = generate_scenarios(&inst, &ScenarioSpec::with_count(3), rng.gen()).unwrap();
        for s in &mut set.scenarios {
            if rng.gen_bool(0.3) {
                s.revenue_floor = Some(rng.gen_range(0.0..3000.0));
            }
            s.water_scale = rng.gen_range(0.5..1.0);
        }
        let mut plan = common::random_plan(&mut rng, &inst);
        // Mutate: some slots get any crop, admissible or not.
        for _ in 0..3 {
            let u = rng.gen_range(0..inst.units.len());
            let t = rng.gen_range(0..inst.horizon);
            plan.set(u, t, Some(rng.gen_range(0..inst.crops.len())));
        }

        let mut want = Vec::new();
        for (u, t, c) in plan.plantings() {
            if !feasible_crops(&inst.units[u], &inst.crops).contains(&c) {
                want.push(PlanViolation::Inadmissible {
                    unit: u,
                    period: t,
                    crop: c,
                });
            }
        }
        for t in 0..inst.horizon {
            for u in capacity_violation(&plan, &inst, t) {
                want.push(PlanViolation::Capacity { unit: u, period: t });
            }
        }
        for t in 0..inst.horizon {
            if let Some(excess) = water_violation(&plan, &inst, t) {
                want.push(PlanViolation::Water { period: t, excess });
            }
        }
        want.extend(
            rotation_legal(&plan, &inst)
                .into_iter()
                .map(PlanViolation::Rotation),
        );
        want.extend(
            legume_window_violations(&plan, &inst)
                .into_iter()
                .map(|(unit, start)| PlanViolation::LegumeWindow { unit, start }),
        );
        for (k, s) in set.scenarios.iter().enumerate() {
            want.extend(
                scenario_breaches(&plan, s, &inst)
                    .into_iter()
                    .filter(|b| !matches!(b, ScenarioBreach::Capacity { .. }))
                    .map(|breach| PlanViolation::Scenario {
                        scenario: k,
                        breach,
                    }),
            );
        }
        assert_eq!(feasible(&plan, &inst, &set), want);
    }
}

#[test]
fn unreachable_revenue_floor_is_an_error() {
    let mut rng = ChaCha8Rng::seed_from_u64(39);
    let inst = common::random_instance(&mut rng, 2, 2, 2);
    let mut set = ScenarioSet::nominal(&inst);
    set.scenarios[0].revenue_floor = Some(1e12);
    assert!(matches!(
        local_search_optimize(&inst, &set, &quick(1)),
        Err(Error::InfeasiblePlan(_))
    ));
}
