use std::path::PathBuf;

use thiserror::Error;

use crate::model::InstanceViolation;
use crate::optimizer::PlanViolation;

/// Errors raised by the planning library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("units '{first}' and '{second}' both contain grid cell ({row}, {col})")]
    OverlappingCells {
        first: String,
        second: String,
        row: i32,
        col: i32,
    },
    #[error("invalid scenario spec: {0}")]
    InvalidScenarioSpec(String),
    #[error("ambiguity radius must be non-negative, got {0}")]
    NegativeRadius(f64),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid distance matrix: {0}")]
    InvalidDistances(String),
    #[error("plan is infeasible ({} violation(s)); first: {}", .0.len(), .0.first().map(|v| v.to_string()).unwrap_or_default())]
    InfeasiblePlan(Vec<PlanViolation>),
    #[error(
        "exhaustive search needs {candidates:e} candidate plans, above the bound of {bound:e}"
    )]
    SearchTooLarge { candidates: f64, bound: f64 },
    #[error("period {period} is outside the horizon of {horizon} periods")]
    PeriodOutOfRange { period: usize, horizon: usize },
    #[error("invalid rho grid: {0}")]
    InvalidRhoGrid(String),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("instance failed validation:\n{}", format_violations(.0))]
    InvalidInstance(Vec<InstanceViolation>),
    #[error("{}: {message}", .path.display())]
    Schema { path: PathBuf, message: String },
    #[error("unknown {kind} '{id}'")]
    UnknownId { kind: &'static str, id: String },
    #[error("cannot access {}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn format_violations(violations: &[InstanceViolation]) -> String {
    violations
        .iter()
        .map(|v| format!("  - {v}"))
        .collect::<Vec<_>>()
        .join("\n")
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
