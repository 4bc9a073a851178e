mod common;

use common::dual_worst_case;
use mlrcpf::optimizer::evaluate;
use mlrcpf::spatial::build_adjacency;
use mlrcpf::temporal::simulate;
use mlrcpf::uncertainty::{
    generate_scenarios, robust_value, scenario_totals, worst_case_expectation, DistanceMatrix,
    ScenarioSpec, WassersteinBall,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Problem {
    values: Vec<f64>,
    weights: Vec<f64>,
    distances: Vec<Vec<f64>>,
}

fn random_problem(rng: &mut ChaCha8Rng, metric: bool) -> Problem {
    let n = rng.gen_range(3..=6);
    let values = (0..n).map(|_| rng.gen_range(-100.0..100.0)).collect();
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let weights = raw.iter().map(|w| w / total).collect();
    let distances = if metric {
        let points: Vec<[f64; 3]> = (0..n)
            .map(|_| {
                [
                    rng.gen_range(0.0..1.0),
                    rng.gen_range(0.0..1.0),
                    rng.gen_range(0.0..1.0),
                ]
            })
            .collect();
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..3).map(|d| (points[i][d] - points[j][d]).abs()).sum())
                    .collect()
            })
            .collect()
    } else {
        let mut d = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let x = rng.gen_range(0.0..2.0);
                d[i][j] = x;
                d[j][i] = x;
            }
        }
        d
    };
    Problem {
        values,
        weights,
        distances,
    }
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn matches_dual_oracle_on_random_problems() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..400 {
        let p = random_problem(&mut rng, case % 2 == 0);
        let rho = rng.gen_range(0.0..0.8);
        let dm = DistanceMatrix::from_rows(&p.distances).unwrap();
        let got = worst_case_expectation(&p.values, &p.weights, &dm, rho).unwrap();
        let want = dual_worst_case(&p.values, &p.weights, &p.distances, rho);
        assert!(
            close(got.value, want, 1e-9),
            "case {case}: {} vs {want}",
            got.value
        );
    }
}

#[test]
fn worst_distribution_is_in_the_ball_and_attains_the_value() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..200 {
        let p = random_problem(&mut rng, true);
        let rho = rng.gen_range(0.0..0.5);
        let dm = DistanceMatrix::from_rows(&p.distances).unwrap();
        let r = worst_case_expectation(&p.values, &p.weights, &dm, rho).unwrap();
        assert!(r.worst_weights.iter().all(|&q| q >= -1e-12));
        assert!(close(r.worst_weights.iter().sum(), 1.0, 1e-12));
        assert!(r.transport_cost_used <= rho + 1e-12);
        let attained: f64 = r
            .worst_weights
            .iter()
            .zip(&p.values)
            .map(|(q, v)| q * v)
            .sum();
        assert!(close(attained, r.value, 1e-9));
    }
}

#[test]
fn zero_radius_is_the_empirical_mean() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..100 {
        let p = random_problem(&mut rng, true);
        let dm = DistanceMatrix::from_rows(&p.distances).unwrap();
        let r = worst_case_expectation(&p.values, &p.weights, &dm, 0.0).unwrap();
        let mean: f64 = p.weights.iter().zip(&p.values).map(|(w, v)| w * v).sum();
        assert_eq!(r.value, mean);
        assert_eq!(r.worst_weights, p.weights);
    }
}

#[test]
fn radius_past_every_distance_gives_the_minimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..100 {
        let p = random_problem(&mut rng, true);
        let dm = DistanceMatrix::from_rows(&p.distances).unwrap();
        let far = p.distances.iter().flatten().fold(0.0f64, |m, &d| m.max(d)) + 1.0;
        let r = worst_case_expectation(&p.values, &p.weights, &dm, far).unwrap();
        let min = p.values.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(close(r.value, min, 1e-12));
    }
}

/// Four scenarios on a fine grid of transport plans: every sampled plan
/// within budget is no better than the solver's minimum, and the best
/// sample comes close to it.
#[test]
fn fine_grid_of_transport_plans() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let steps = 4usize;
    for _ in 0..5 {
        let mut p = random_problem(&mut rng, true);
        while p.values.len() != 4 {
            p = random_problem(&mut rng, true);
        }
        let n = 4;
        let rho = 0.15;
        let dm = DistanceMatrix::from_rows(&p.distances).unwrap();
        let solver = worst_case_expectation(&p.values, &p.weights, &dm, rho)
            .unwrap()
            .value;

        // Compositions of `steps` into 4 parts, one per source row.
        let mut rows = Vec::new();
        for a in 0..=steps {
            for b in 0..=steps - a {
                for c in 0..=steps - a - b {
                    rows.push([a, b, c, steps - a - b - c]);
                }
            }
        }
        let mut best = f64::INFINITY;
        let mut idx = [0usize; 4];
        'outer: loop {
            let mut cost = 0.0;
            let mut value = 0.0;
            for k in 0..n {
                for j in 0..n {
                    let share = p.weights[k] * rows[idx[k]][j] as f64 / steps as f64;
                    cost += share * p.distances[k][j];
                    value += share * p.values[j];
                }
            }
            if cost <= rho {
                assert!(value >= solver - 1e-9);
                best = best.min(value);
            }
            for k in 0..n {
                idx[k] += 1;
                if idx[k] < rows.len() {
                    continue 'outer;
                }
                idx[k] = 0;
            }
            break;
        }
        let spread = p.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            - p.values.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(
            best - solver <= 0.25 * spread,
            "grid best {best} vs solver {solver}"
        );
    }
}

#[test]
fn robust_value_of_a_tiny_plan_matches_the_dual() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for _ in 0..20 {
        let inst = common::random_instance(&mut rng, 3, 3, 3);
        let set = generate_scenarios(&inst, &ScenarioSpec::with_count(5), rng.gen()).unwrap();
        let plan = common::random_plan(&mut rng, &inst);
        let adjacency = build_adjacency(&inst.units).unwrap();
        let traj = simulate(&plan, &inst, &adjacency);
        let ball = WassersteinBall::for_set(&inst, &set, 0.02).unwrap();
        let totals = scenario_totals(&plan, &inst, &traj, &set);
        let rows: Vec<Vec<f64>> = (0..set.len())
            .map(|i| (0..set.len()).map(|j| ball.distances().get(i, j)).collect())
            .collect();
        let want = dual_worst_case(&totals, &set.weights(), &rows, 0.02);
        let got = robust_value(&plan, &inst, &traj, &set, 0.02).unwrap().value;
        assert!(close(got, want, 1e-9));
    }
}

#[test]
fn single_nominal_scenario_gives_deterministic_profit() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let inst = common::random_instance(&mut rng, 3, 4, 3);
    let set = mlrcpf::uncertainty::ScenarioSet::nominal(&inst);
    let mut plan = mlrcpf::Plan::for_instance(&inst);
    let options = mlrcpf::spatial::admissible_actions(&inst, 0);
    if let Some(&c) = options[0].first() {
        plan.set(0, 0, Some(c));
    }
    let mut relaxed = inst.clone();
    relaxed.water_limits = vec![1e9; relaxed.horizon];
    let m = evaluate(&plan, &relaxed, &set, 0.3).unwrap();
    let nominal = mlrcpf::optimizer::nominal_profit(&plan, &relaxed).unwrap();
    assert_eq!(m.worst_case_profit, m.total_expected_profit);
    assert!(close(m.worst_case_profit, nominal, 1e-12));
}
