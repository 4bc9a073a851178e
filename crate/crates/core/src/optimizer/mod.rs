//! Feasibility, plan metrics, exact and heuristic solvers, and radius sweeps.

mod anneal;
mod baseline;
mod engine;
mod feasibility;
mod metrics;
mod oracle;
mod sweep;

pub use anneal::{
    cooling_for, format_log, local_search_from, local_search_optimize, LogRow, MoveWeights,
    SolveOutcome, SolverConfig,
};
pub use baseline::{baseline_deterministic, baseline_robust};
pub use feasibility::{feasible, legume_window_violations, structural_violations, PlanViolation};
pub use metrics::{
    annual_profits, evaluate, evaluate_in, legume_ratio, nominal_profit, PlanMetrics,
};
pub use oracle::{
    brute_force_optimize, brute_force_with_bound, search_size, OracleSolution, DEFAULT_SEARCH_BOUND,
};
pub use sweep::{parse_rho_grid, sensitivity_sweep, validate_rho_grid, SweepMode, SweepPoint};
