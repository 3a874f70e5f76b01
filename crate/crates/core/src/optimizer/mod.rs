//! Cost functionals, control projections, projected-gradient descent,
//! penalty continuation and bang-bang verification.

mod bangbang;
mod continuation;
mod cost;
mod pg;
mod projection;

pub use bangbang::{bang_bang_classify, BangBangReport, SlotReport};
pub use continuation::{continuation, Schedule, StageResult};
pub use cost::{check_indicator, cost_j, cost_j_eps, cost_j_eps_sigma, cost_with_mode, fenchel_gap_integral, CostReport};
pub use pg::{
    evaluate, evaluate_cost, minimize_eta, optimize, stationarity_residual, Evaluation, HistoryEntry, Objective,
    OptimizationResult, OptimizeOptions, Termination,
};
pub use projection::{is_feasible, project_controls};
