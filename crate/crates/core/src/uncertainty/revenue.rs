use crate::model::{Plan, PlanningInstance};
use crate::temporal::StateTrajectory;

use super::scenario::{Scenario, ScenarioSet};

/// Yield multiplier induced by an interaction potential.
#[inline]
pub fn interaction_multiplier(instance: &PlanningInstance, eta: f64) -> f64 {
    let clamp = instance.interaction_clamp;
    1.0 + instance.interaction_yield_gain * eta.clamp(-clamp, clamp)
}

/// Uncapped net revenue of `crop` on `unit` in `period`.
#[inline]
pub(crate) fn unit_revenue(
    instance: &PlanningInstance,
    unit: usize,
    crop: usize,
    period: usize,
    scenario: &Scenario,
    eta: f64,
) -> f64 {
    let u = &instance.units[unit];
    let c = &instance.crops[crop];
    let k = scenario.index(crop, period);
    let area = c.area_on(u);
    let produced = u.productivity_factor
        * c.baseline_yield
        * scenario.yield_factor[k]
        * scenario.unit_yield_factor(unit)
        * interaction_multiplier(instance, eta)
        * area;
    scenario.price[k] * produced - scenario.cost[k] * area
}

/// Net revenue of one period under one scenario.
///
/// `eta[i]` is the interaction potential of unit `i` in this period.
/// `remaining` is scratch space for the per-crop demand left to sell.
pub(crate) fn period_revenue(
    instance: &PlanningInstance,
    plan: &Plan,
    period: usize,
    scenario: &Scenario,
    eta: &[f64],
    remaining: &mut Vec<f64>,
) -> f64 {
    if !instance.demand_cap {
        return (0..instance.units.len())
            .filter_map(|i| {
                plan.get(i, period)
                    .map(|c| unit_revenue(instance, i, c, period, scenario, eta[i]))
            })
            .sum();
    }
    remaining.clear();
    remaining.extend(
        (0..instance.crops.len())
            .map(|c| scenario.demand[scenario.index(c, period)].unwrap_or(f64::INFINITY)),
    );
    let mut total = 0.0;
    for (i, unit) in instance.units.iter().enumerate() {
        let Some(c) = plan.get(i, period) else {
            continue;
        };
        let crop = &instance.crops[c];
        let k = scenario.index(c, period);
        let area = crop.area_on(unit);
        let produced = unit.productivity_factor
            * crop.baseline_yield
            * scenario.yield_factor[k]
            * scenario.unit_yield_factor(i)
            * interaction_multiplier(instance, eta[i])
            * area;
        let price = scenario.price[k];
        let sold = produced.min(remaining[c]);
        remaining[c] -= sold;
        total += price * sold + instance.salvage_fraction * price * (produced - sold)
            - scenario.cost[k] * area;
    }
    total
}

/// Per-period net revenue of `plan` under `scenario`.
pub fn scenario_revenue(
    plan: &Plan,
    scenario: &Scenario,
    instance: &PlanningInstance,
    trajectory: &StateTrajectory,
) -> Vec<f64> {
    let mut remaining = Vec::new();
    let mut eta = vec![0.0; instance.units.len()];
    (0..instance.horizon)
        .map(|t| {
            for (i, e) in eta.iter_mut().enumerate() {
                *e = trajectory.eta(i, t);
            }
            period_revenue(instance, plan, t, scenario, &eta, &mut remaining)
        })
        .collect()
}

/// Horizon total of every scenario, in set order.
pub fn scenario_totals(
    plan: &Plan,
    instance: &PlanningInstance,
    trajectory: &StateTrajectory,
    set: &ScenarioSet,
) -> Vec<f64> {
    set.scenarios
        .iter()
        .map(|s| scenario_revenue(plan, s, instance, trajectory).iter().sum())
        .collect()
}

/// Scenario-independent objective deduction for accumulated rotation stress.
pub fn stress_penalty(instance: &PlanningInstance, trajectory: &StateTrajectory) -> f64 {
    if instance.rotation_stress_penalty == 0.0 {
        0.0
    } else {
        instance.rotation_stress_penalty * trajectory.total_stress()
    }
}
