//! Uncertainty layer: Monte Carlo scenarios, scenario revenue, and the
//! Wasserstein worst-case evaluation of a plan.

mod dro;
mod revenue;
mod scenario;

pub use dro::{
    distance_matrix, ground_distance, robust_value, theta, worst_case_expectation, AmbiguitySpec,
    DistanceMatrix, WassersteinBall, WorstCaseResult, WorstCaseScratch,
};
pub use revenue::{interaction_multiplier, scenario_revenue, scenario_totals, stress_penalty};
pub(crate) use revenue::{period_revenue, unit_revenue};
pub use scenario::{
    generate_scenarios, generate_scenarios_with, Scenario, ScenarioSet, ScenarioSpec,
};

use crate::model::{Plan, PlanningInstance};
use crate::spatial::{build_adjacency, capacity_violation, water_excess};
use crate::temporal::simulate;

/// Why a plan falls outside one scenario's feasible region.
#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioBreach {
    Capacity { unit: usize, period: usize },
    Water { period: usize, excess: f64 },
    RevenueFloor { revenue: f64, floor: f64 },
}

/// Every breach of `scenario`'s feasible region by `plan`.
pub fn scenario_breaches(
    plan: &Plan,
    scenario: &Scenario,
    instance: &PlanningInstance,
) -> Vec<ScenarioBreach> {
    let mut out = Vec::new();
    for t in 0..instance.horizon {
        for unit in capacity_violation(plan, instance, t) {
            out.push(ScenarioBreach::Capacity { unit, period: t });
        }
        let limit = instance.water_limits[t] * scenario.water_scale;
        if let Some(excess) = water_excess(plan, instance, t, limit) {
            out.push(ScenarioBreach::Water { period: t, excess });
        }
    }
    if let Some(floor) = scenario.revenue_floor {
        // Adjacency failure means overlapping cells; validation reports that.
        if let Ok(adjacency) = build_adjacency(&instance.units) {
            let traj = simulate(plan, instance, &adjacency);
            let revenue: f64 = scenario_revenue(plan, scenario, instance, &traj)
                .iter()
                .sum();
            if revenue < floor {
                out.push(ScenarioBreach::RevenueFloor { revenue, floor });
            }
        }
    }
    out
}

/// Whether `plan` satisfies capacity, water, and the revenue floor under
/// `scenario`'s parameters.
pub fn scenario_feasible(plan: &Plan, scenario: &Scenario, instance: &PlanningInstance) -> bool {
    scenario_breaches(plan, scenario, instance).is_empty()
}
