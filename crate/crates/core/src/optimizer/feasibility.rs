use std::fmt;

use crate::model::{Plan, PlanningInstance};
use crate::spatial::{capacity_violation, feasible_crops, water_violation};
use crate::temporal::{rotation_legal, RotationViolation};
use crate::uncertainty::{scenario_breaches, ScenarioBreach, ScenarioSet};

/// One broken constraint of the unified program.
#[derive(Debug, Clone, PartialEq)]
pub enum PlanViolation {
    Shape {
        units: usize,
        horizon: usize,
    },
    UnknownCrop {
        unit: usize,
        period: usize,
        crop: usize,
    },
    /// Crop not allowed on the unit's land type.
    Inadmissible {
        unit: usize,
        period: usize,
        crop: usize,
    },
    Capacity {
        unit: usize,
        period: usize,
    },
    Water {
        period: usize,
        excess: f64,
    },
    Rotation(RotationViolation),
    /// No legume or fallow period in the window starting at `start`.
    LegumeWindow {
        unit: usize,
        start: usize,
    },
    Scenario {
        scenario: usize,
        breach: ScenarioBreach,
    },
}

impl fmt::Display for PlanViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlanViolation::Shape { units, horizon } => {
                write!(
                    f,
                    "plan shape does not match instance ({units} units x {horizon} periods)"
                )
            }
            PlanViolation::UnknownCrop { unit, period, crop } => {
                write!(f, "unit {unit} period {period}: unknown crop index {crop}")
            }
            PlanViolation::Inadmissible { unit, period, crop } => {
                write!(
                    f,
                    "unit {unit} period {period}: crop {crop} not allowed on this land type"
                )
            }
            PlanViolation::Capacity { unit, period } => {
                write!(
                    f,
                    "unit {unit} period {period}: planted area exceeds unit area"
                )
            }
            PlanViolation::Water { period, excess } => {
                write!(f, "period {period}: irrigation exceeds limit by {excess}")
            }
            PlanViolation::Rotation(v) => write!(
                f,
                "unit {} period {}: crop {} repeated before its replant interval",
                v.unit, v.period, v.crop
            ),
            PlanViolation::LegumeWindow { unit, start } => write!(
                f,
                "unit {unit}: no legume or fallow period in window starting at {start}"
            ),
            PlanViolation::Scenario { scenario, breach } => {
                write!(f, "scenario {scenario}: {breach:?}")
            }
        }
    }
}

/// Windows without a legume or fallow period, as `(unit, start)`.
pub fn legume_window_violations(plan: &Plan, instance: &PlanningInstance) -> Vec<(usize, usize)> {
    let Some(window) = instance.legume_window else {
        return Vec::new();
    };
    let mut out = Vec::new();
    if window == 0 || window > plan.horizon() {
        return out;
    }
    for unit in 0..plan.units() {
        let row = plan.unit_row(unit);
        for start in 0..=(row.len() - window) {
            if !row[start..start + window]
                .iter()
                .any(|c| restorative(instance, *c))
            {
                out.push((unit, start));
            }
        }
    }
    out
}

#[inline]
pub(crate) fn restorative(instance: &PlanningInstance, slot: Option<usize>) -> bool {
    slot.is_none_or(|c| instance.crops[c].is_legume())
}

/// Checks that need only the instance: land type, area, water, rotation,
/// and the legume window.
pub fn structural_violations(plan: &Plan, instance: &PlanningInstance) -> Vec<PlanViolation> {
    if !plan.matches_shape(instance) {
        return vec![PlanViolation::Shape {
            units: instance.units.len(),
            horizon: instance.horizon,
        }];
    }
    let unknown: Vec<PlanViolation> = plan
        .plantings()
        .filter(|&(_, _, c)| c >= instance.crops.len())
        .map(|(unit, period, crop)| PlanViolation::UnknownCrop { unit, period, crop })
        .collect();
    if !unknown.is_empty() {
        return unknown;
    }

    let mut out = Vec::new();
    let allowed: Vec<Vec<usize>> = instance
        .units
        .iter()
        .map(|u| feasible_crops(u, &instance.crops))
        .collect();
    for (unit, period, crop) in plan.plantings() {
        if allowed[unit].binary_search(&crop).is_err() {
            out.push(PlanViolation::Inadmissible { unit, period, crop });
        }
    }
    for period in 0..instance.horizon {
        out.extend(
            capacity_violation(plan, instance, period)
                .into_iter()
                .map(|unit| PlanViolation::Capacity { unit, period }),
        );
    }
    for period in 0..instance.horizon {
        if let Some(excess) = water_violation(plan, instance, period) {
            out.push(PlanViolation::Water { period, excess });
        }
    }
    out.extend(
        rotation_legal(plan, instance)
            .into_iter()
            .map(PlanViolation::Rotation),
    );
    out.extend(
        legume_window_violations(plan, instance)
            .into_iter()
            .map(|(unit, start)| PlanViolation::LegumeWindow { unit, start }),
    );
    out
}

/// All violations of `plan`; empty iff it is feasible for the instance and
/// every scenario in `set`.
///
/// Capacity does not vary by scenario, so it is reported once.
pub fn feasible(plan: &Plan, instance: &PlanningInstance, set: &ScenarioSet) -> Vec<PlanViolation> {
    let mut out = structural_violations(plan, instance);
    if matches!(
        out.first(),
        Some(PlanViolation::Shape { .. } | PlanViolation::UnknownCrop { .. })
    ) {
        return out;
    }
    for (k, scenario) in set.scenarios.iter().enumerate() {
        out.extend(
            scenario_breaches(plan, scenario, instance)
                .into_iter()
                .filter(|b| !matches!(b, ScenarioBreach::Capacity { .. }))
                .map(|breach| PlanViolation::Scenario {
                    scenario: k,
                    breach,
                }),
        );
    }
    out
}
