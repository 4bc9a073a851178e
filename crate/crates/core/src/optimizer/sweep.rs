//! Worst-case profit as a function of the ambiguity radius.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Plan, PlanningInstance};
use crate::uncertainty::{ScenarioSet, WassersteinBall};

use super::anneal::{local_search_from, SolverConfig};
use super::metrics::evaluate_in;

#[derive(Debug, Clone, Copy)]
pub enum SweepMode<'a> {
    /// Re-evaluate one plan at every radius.
    Fixed(&'a Plan),
    /// Re-solve at every radius, starting from `initial`.
    Resolve {
        initial: &'a Plan,
        config: &'a SolverConfig,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub rho: f64,
    pub worst_case_profit: f64,
}

/// Parses a comma-separated radius list such as `"0,0.05,0.1"`.
pub fn parse_rho_grid(text: &str) -> Result<Vec<f64>> {
    let grid = text
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidRhoGrid(format!("'{}' is not a number", s.trim())))
        })
        .collect::<Result<Vec<f64>>>()?;
    validate_rho_grid(&grid)?;
    Ok(grid)
}

pub fn validate_rho_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidRhoGrid("grid is empty".into()));
    }
    if let Some(r) = grid.iter().find(|r| !(**r >= 0.0) || !r.is_finite()) {
        return Err(Error::InvalidRhoGrid(format!(
            "{r} is not a finite non-negative radius"
        )));
    }
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidRhoGrid("grid must be ascending".into()));
    }
    Ok(())
}

pub fn sensitivity_sweep(
    instance: &PlanningInstance,
    set: &ScenarioSet,
    mode: SweepMode<'_>,
    rho_grid: &[f64],
) -> Result<Vec<SweepPoint>> {
    validate_rho_grid(rho_grid)?;
    let base = WassersteinBall::for_set(instance, set, 0.0)?;
    rho_grid
        .iter()
        .map(|&rho| {
            let worst_case_profit = match mode {
                SweepMode::Fixed(plan) => {
                    evaluate_in(plan, instance, set, &base.with_rho(rho)?)?.worst_case_profit
                }
                SweepMode::Resolve { initial, config } => {
                    let config = SolverConfig {
                        rho,
                        ..config.clone()
                    };
                    local_search_from(instance, set, &config, initial)?
                        .metrics
                        .worst_case_profit
                }
            };
            Ok(SweepPoint {
                rho,
                worst_case_profit,
            })
        })
        .collect()
}
