use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Plan, PlanningInstance};
use crate::spatial::build_adjacency;
use crate::temporal::simulate;
use crate::uncertainty::{scenario_revenue, ScenarioSet, WassersteinBall};

use super::feasibility::feasible;

/// Economic and agronomic summary of a plan. Money is raw CNY.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanMetrics {
    /// Empirical mean of horizon profit.
    pub total_expected_profit: f64,
    /// Worst-case expected horizon profit over the ambiguity ball.
    pub worst_case_profit: f64,
    /// Standard deviation of annual profit pooled over (scenario, year).
    pub volatility: f64,
    /// Share of planting events that are legumes.
    pub legume_ratio: f64,
}

impl PlanMetrics {
    pub const ZERO: PlanMetrics = PlanMetrics {
        total_expected_profit: 0.0,
        worst_case_profit: 0.0,
        volatility: 0.0,
        legume_ratio: 0.0,
    };
}

/// Profit per scenario and year: `result[scenario][year]`.
pub fn annual_profits(
    plan: &Plan,
    instance: &PlanningInstance,
    set: &ScenarioSet,
) -> Result<Vec<Vec<f64>>> {
    let adjacency = build_adjacency(&instance.units)?;
    let traj = simulate(plan, instance, &adjacency);
    let years = instance.years();
    Ok(set
        .scenarios
        .iter()
        .map(|s| {
            let mut annual = vec![0.0; years];
            for (t, r) in scenario_revenue(plan, s, instance, &traj)
                .into_iter()
                .enumerate()
            {
                annual[instance.year_of(t)] += r;
            }
            annual
        })
        .collect())
}

pub fn legume_ratio(plan: &Plan, instance: &PlanningInstance) -> f64 {
    let total = plan.planting_count();
    if total == 0 {
        return 0.0;
    }
    let legumes = plan
        .plantings()
        .filter(|&(_, _, c)| instance.crops[c].is_legume())
        .count();
    legumes as f64 / total as f64
}

/// Metrics of a feasible plan under the radius-`rho` ball around `set`.
pub fn evaluate(
    plan: &Plan,
    instance: &PlanningInstance,
    set: &ScenarioSet,
    rho: f64,
) -> Result<PlanMetrics> {
    let ball = WassersteinBall::for_set(instance, set, rho)?;
    evaluate_in(plan, instance, set, &ball)
}

/// As [`evaluate`] with a prepared ball.
pub fn evaluate_in(
    plan: &Plan,
    instance: &PlanningInstance,
    set: &ScenarioSet,
    ball: &WassersteinBall,
) -> Result<PlanMetrics> {
    set.validate(instance)?;
    let violations = feasible(plan, instance, set);
    if !violations.is_empty() {
        return Err(Error::InfeasiblePlan(violations));
    }
    let annual = annual_profits(plan, instance, set)?;
    let totals: Vec<f64> = annual.iter().map(|a| a.iter().sum()).collect();
    let weights = set.weights();
    let years = instance.years().max(1) as f64;

    let mean_annual: f64 = annual
        .iter()
        .zip(&weights)
        .map(|(a, p)| p * a.iter().sum::<f64>() / years)
        .sum();
    let variance: f64 = annual
        .iter()
        .zip(&weights)
        .map(|(a, p)| {
            p / years
                * a.iter()
                    .map(|x| (x - mean_annual) * (x - mean_annual))
                    .sum::<f64>()
        })
        .sum();

    Ok(PlanMetrics {
        total_expected_profit: ball.expectation(&totals),
        worst_case_profit: ball.worst_case(&totals).value,
        volatility: variance.max(0.0).sqrt(),
        legume_ratio: legume_ratio(plan, instance),
    })
}

/// Horizon profit under the nominal scenario.
pub fn nominal_profit(plan: &Plan, instance: &PlanningInstance) -> Result<f64> {
    let set = ScenarioSet::nominal(instance);
    Ok(annual_profits(plan, instance, &set)?[0].iter().sum())
}
