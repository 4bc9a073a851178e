//! Temporal layer: agronomic state transitions, rotation stress, rotation
//! intervals, and neighbour interaction potential.

use crate::model::{AgronomicState, Crop, InteractionMatrix, Plan, PlanningInstance};
use crate::spatial::AdjacencyMatrix;

/// States of every unit at the start of each period, plus the final state.
///
/// Index `t` holds the state before the decisions of period `t`; index
/// `horizon` holds the state after the last period. The interaction
/// potential stored at `t + 1` is therefore the one induced by period `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateTrajectory {
    units: usize,
    horizon: usize,
    states: Vec<AgronomicState>,
}

impl StateTrajectory {
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn units(&self) -> usize {
        self.units
    }

    /// State of `unit` at `index` in `0..=horizon`.
    pub fn at(&self, unit: usize, index: usize) -> &AgronomicState {
        &self.states[index * self.units + unit]
    }

    /// All unit states at `index`.
    pub fn period(&self, index: usize) -> &[AgronomicState] {
        &self.states[index * self.units..(index + 1) * self.units]
    }

    /// Interaction potential generated by the decisions of `period`.
    pub fn eta(&self, unit: usize, period: usize) -> f64 {
        self.at(unit, period + 1).interaction_potential
    }

    /// Sum of rotation stress over every unit and every post-decision state.
    pub fn total_stress(&self) -> f64 {
        self.states[self.units..]
            .iter()
            .map(|s| s.rotation_stress)
            .sum()
    }
}

/// States before the first period: no stress, no interaction, and the
/// previous crop taken from the instance history when present.
pub fn initial_states(instance: &PlanningInstance) -> Vec<AgronomicState> {
    instance
        .history_crops()
        .into_iter()
        .map(|last_crop| AgronomicState {
            last_crop,
            rotation_stress: 0.0,
            interaction_potential: 0.0,
        })
        .collect()
}

/// Stress after choosing `chosen` from `state`.
///
/// Repeating the previous crop's category adds 1, a legume removes 2, a
/// fallow period removes 1; the result never drops below zero.
pub fn rotation_stress_update(
    state: &AgronomicState,
    chosen: Option<usize>,
    crops: &[Crop],
) -> f64 {
    let delta = match chosen {
        None => -1.0,
        Some(c) => {
            let same_category = state
                .last_crop
                .is_some_and(|prev| crops[prev].category == crops[c].category);
            if same_category {
                1.0
            } else if crops[c].is_legume() {
                -2.0
            } else {
                0.0
            }
        }
    };
    (state.rotation_stress + delta).max(0.0)
}

/// Interaction potential of `unit` in `period`: sum of `M[c_unit, c_neighbor]`
/// over planted neighbours. Zero when the unit itself is fallow.
pub fn interaction_potential(
    unit: usize,
    period: usize,
    plan: &Plan,
    adjacency: &AdjacencyMatrix,
    interaction: &InteractionMatrix,
) -> f64 {
    let Some(own) = plan.get(unit, period) else {
        return 0.0;
    };
    adjacency
        .neighbors(unit)
        .iter()
        .filter_map(|&j| plan.get(j, period))
        .map(|other| interaction.get(own, other))
        .sum()
}

/// Advances every unit's state through the decisions of `period`.
///
/// Under fallow the previous crop is kept.
pub fn transition(
    states: &[AgronomicState],
    plan: &Plan,
    period: usize,
    adjacency: &AdjacencyMatrix,
    instance: &PlanningInstance,
) -> Vec<AgronomicState> {
    states
        .iter()
        .enumerate()
        .map(|(i, state)| {
            let chosen = plan.get(i, period);
            AgronomicState {
                last_crop: chosen.or(state.last_crop),
                rotation_stress: rotation_stress_update(state, chosen, &instance.crops),
                interaction_potential: interaction_potential(
                    i,
                    period,
                    plan,
                    adjacency,
                    &instance.interaction,
                ),
            }
        })
        .collect()
}

/// Runs the transition over the full horizon.
pub fn simulate(
    plan: &Plan,
    instance: &PlanningInstance,
    adjacency: &AdjacencyMatrix,
) -> StateTrajectory {
    let units = instance.units.len();
    let mut states = Vec::with_capacity(units * (instance.horizon + 1));
    let mut current = initial_states(instance);
    states.extend_from_slice(&current);
    for t in 0..instance.horizon {
        current = transition(&current, plan, t, adjacency, instance);
        states.extend_from_slice(&current);
    }
    StateTrajectory {
        units,
        horizon: instance.horizon,
        states,
    }
}

/// Stress trajectory of one unit from its initial state, one value per period.
pub(crate) fn unit_stress(
    instance: &PlanningInstance,
    initial: &AgronomicState,
    row: &[Option<usize>],
) -> f64 {
    let mut state = *initial;
    let mut total = 0.0;
    for &chosen in row {
        state.rotation_stress = rotation_stress_update(&state, chosen, &instance.crops);
        state.last_crop = chosen.or(state.last_crop);
        total += state.rotation_stress;
    }
    total
}

/// A premature repeat of `crop` on `unit`, reported at the later period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RotationViolation {
    pub unit: usize,
    pub period: usize,
    pub crop: usize,
}

/// Every pair of plantings of the same crop on one unit closer than its
/// replant interval. The pre-horizon history counts as a planting in the
/// period just before the first.
pub fn rotation_legal(plan: &Plan, instance: &PlanningInstance) -> Vec<RotationViolation> {
    let history = instance.history_crops();
    let mut out = Vec::new();
    for unit in 0..plan.units() {
        let row = plan.unit_row(unit);
        out.extend(
            row_rotation_violations(instance, history[unit], row)
                .map(|(period, crop)| RotationViolation { unit, period, crop }),
        );
    }
    out
}

/// `(period, crop)` of each premature repeat within one unit's row.
pub(crate) fn row_rotation_violations<'a>(
    instance: &'a PlanningInstance,
    history: Option<usize>,
    row: &'a [Option<usize>],
) -> impl Iterator<Item = (usize, usize)> + 'a {
    row.iter().enumerate().flat_map(move |(t, &slot)| {
        let Some(c) = slot else {
            return Vec::new();
        };
        let tau = instance.crops[c].replant_interval as usize;
        let mut hits = Vec::new();
        for delta in 1..tau {
            if delta <= t {
                if row[t - delta] == Some(c) {
                    hits.push((t, c));
                }
            } else if delta == t + 1 && history == Some(c) {
                hits.push((t, c));
            }
        }
        hits
    })
}
