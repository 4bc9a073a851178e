//! Comparator planners.

use crate::error::Result;
use crate::model::{Plan, PlanningInstance};
use crate::uncertainty::ScenarioSet;

use super::anneal::{local_search_optimize, SolverConfig};

/// The instance as the comparators see it: no interactions and no
/// rotation stress penalty.
fn independent(instance: &PlanningInstance) -> PlanningInstance {
    let mut flat = instance.without_interactions();
    flat.rotation_stress_penalty = 0.0;
    flat
}

/// Plan that maximizes nominal-scenario profit with interactions and the
/// stress penalty switched off. The feasibility rules are unchanged.
pub fn baseline_deterministic(instance: &PlanningInstance, config: &SolverConfig) -> Result<Plan> {
    let flat = independent(instance);
    let set = ScenarioSet::nominal(&flat);
    let config = SolverConfig {
        rho: 0.0,
        ..config.clone()
    };
    Ok(local_search_optimize(&flat, &set, &config)?.plan)
}

/// Robust plan over `set` that treats units as independent: interactions
/// and the stress penalty are switched off but the radius and scenarios
/// are kept.
pub fn baseline_robust(
    instance: &PlanningInstance,
    set: &ScenarioSet,
    config: &SolverConfig,
) -> Result<Plan> {
    let flat = independent(instance);
    Ok(local_search_optimize(&flat, set, config)?.plan)
}
