#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use mlrcpf::{Crop, CropCategory, InteractionMatrix, LandType, LandUnit, Plan, PlanningInstance};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn crop(id: &str, category: CropCategory, allowed: &[LandType]) -> Crop {
    Crop {
        id: id.to_string(),
        category,
        baseline_yield: 100.0,
        baseline_price: 2.0,
        baseline_cost: 50.0,
        water_need: 10.0,
        replant_interval: 2,
        allowed_land_types: allowed.iter().copied().collect::<BTreeSet<_>>(),
        area_per_planting: None,
        baseline_demand: None,
    }
}

pub fn unit(id: &str, land_type: LandType, cells: &[(i32, i32)]) -> LandUnit {
    LandUnit {
        id: id.to_string(),
        land_type,
        area: 6.0,
        productivity_factor: 1.0,
        fertility_level: 3,
        irrigated: land_type == LandType::Irrigated,
        cells: cells.to_vec(),
    }
}

pub fn instance(units: Vec<LandUnit>, crops: Vec<Crop>, horizon: usize) -> PlanningInstance {
    let n = crops.len();
    PlanningInstance {
        units,
        crops,
        interaction: InteractionMatrix::zeros(n),
        horizon,
        periods_per_year: 2,
        water_limits: vec![1.0e6; horizon],
        interaction_yield_gain: 0.05,
        interaction_clamp: 0.5,
        salvage_fraction: 0.0,
        demand_cap: false,
        rotation_stress_penalty: 0.0,
        legume_window: None,
        history: BTreeMap::new(),
    }
}

const CATEGORIES: [CropCategory; 4] = [
    CropCategory::Cereal,
    CropCategory::Legume,
    CropCategory::Vegetable,
    CropCategory::Fungus,
];

/// Random valid instance with units on a single row of cells, so
/// consecutive units are neighbours.
pub fn random_instance<R: Rng>(
    rng: &mut R,
    units: usize,
    horizon: usize,
    crops: usize,
) -> PlanningInstance {
    use LandType::*;
    let land = [DryFlat, DryTerrace, Irrigated];
    let units: Vec<LandUnit> = (0..units)
        .map(|i| {
            let mut u = unit(
                &format!("u{i}"),
                land[rng.gen_range(0..land.len())],
                &[(0, i as i32)],
            );
            u.area = rng.gen_range(2.0..10.0);
            u.productivity_factor = rng.gen_range(0.8..1.2);
            u
        })
        .collect();
    let crops: Vec<Crop> = (0..crops)
        .map(|c| {
            let mut allowed: Vec<LandType> =
                land.iter().copied().filter(|_| rng.gen_bool(0.7)).collect();
            if allowed.is_empty() {
                allowed.push(*land.choose(rng).unwrap());
            }
            let mut k = crop(&format!("c{c}"), CATEGORIES[rng.gen_range(0..2)], &allowed);
            k.baseline_yield = rng.gen_range(50.0..300.0);
            k.baseline_price = rng.gen_range(1.0..6.0);
            k.baseline_cost = rng.gen_range(20.0..200.0);
            k.water_need = rng.gen_range(5.0..30.0);
            k.replant_interval = rng.gen_range(1..=3);
            if rng.gen_bool(0.2) {
                k.area_per_planting = Some(rng.gen_range(1.0..8.0));
            }
            k
        })
        .collect();
    let mut inst = instance(units, crops, horizon);
    for a in 0..inst.crops.len() {
        for b in 0..inst.crops.len() {
            if a != b {
                inst.interaction.set(a, b, rng.gen_range(-0.4..0.4));
            }
        }
    }
    let irrigated = inst.units.iter().filter(|u| u.irrigated).count() as f64;
    inst.water_limits = (0..horizon)
        .map(|_| rng.gen_range(0.0..25.0) * irrigated)
        .collect();
    inst.rotation_stress_penalty = if rng.gen_bool(0.3) {
        rng.gen_range(0.0..50.0)
    } else {
        0.0
    };
    inst
}

/// Random assignment of admissible crops, ignoring rotation and water.
pub fn random_plan<R: Rng>(rng: &mut R, instance: &PlanningInstance) -> Plan {
    let admissible = mlrcpf::spatial::admissible_actions(instance, 0);
    let mut plan = Plan::for_instance(instance);
    for (u, options) in admissible.iter().enumerate() {
        for t in 0..instance.horizon {
            if !options.is_empty() && rng.gen_bool(0.7) {
                plan.set(u, t, Some(*options.choose(rng).unwrap()));
            }
        }
    }
    plan
}

/// Worst-case expectation by the Lagrangian dual of the transport problem:
/// the maximum over λ ≥ 0 of `-λρ + Σ_k p_k min_j (v_j + λ d_kj)`. The dual
/// is concave and piecewise linear, so the maximum sits at λ = 0 or at a
/// point where some source's minimizer changes.
pub fn dual_worst_case(values: &[f64], weights: &[f64], distances: &[Vec<f64>], rho: f64) -> f64 {
    let n = values.len();
    if rho == 0.0 {
        return weights.iter().zip(values).map(|(p, v)| p * v).sum();
    }
    let dual = |lambda: f64| -> f64 {
        -lambda * rho
            + (0..n)
                .map(|k| {
                    let best = (0..n)
                        .map(|j| values[j] + lambda * distances[k][j])
                        .fold(f64::INFINITY, f64::min);
                    weights[k] * best
                })
                .sum::<f64>()
    };
    let mut candidates = vec![0.0];
    for row in distances {
        for a in 0..n {
            for b in 0..n {
                let dd = row[a] - row[b];
                if dd > 0.0 {
                    let lambda = (values[b] - values[a]) / dd;
                    if lambda > 0.0 {
                        candidates.push(lambda);
                    }
                }
            }
        }
    }
    candidates
        .into_iter()
        .map(dual)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Interaction potential written as the full sum over neighbour units and
/// crop pairs of `A_ij x_ic x_jc' M_cc'`.
pub fn eta_full_sum(
    plan: &Plan,
    instance: &PlanningInstance,
    adjacency: &mlrcpf::spatial::AdjacencyMatrix,
    unit: usize,
    period: usize,
) -> f64 {
    let n_c = instance.crops.len();
    let x = |i: usize, c: usize| -> f64 {
        if plan.get(i, period) == Some(c) {
            1.0
        } else {
            0.0
        }
    };
    let mut total = 0.0;
    for j in 0..instance.units.len() {
        let a = if adjacency.get(unit, j) { 1.0 } else { 0.0 };
        for c in 0..n_c {
            for d in 0..n_c {
                total += a * x(unit, c) * x(j, d) * instance.interaction.get(c, d);
            }
        }
    }
    total
}
