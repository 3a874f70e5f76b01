use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{what}: argument {value} outside its domain")]
    Domain { what: &'static str, value: f64 },

    #[error("field has {found} values, grid expects {expected}")]
    GridMismatch { expected: usize, found: usize },

    #[error("time series has {found} levels, expected {expected}")]
    TimeMismatch { expected: usize, found: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{stage} Newton solve did not converge after {iterations} iterations (residual {residual:e})")]
    NewtonFailure {
        stage: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("linear system is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("time step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("indicator value {value} at level {level}, node {node} outside [-1, 1]")]
    InfeasibleIndicator {
        level: usize,
        node: usize,
        value: f64,
    },

    #[error("optimizer iteration {iteration}: {source}")]
    Iterate {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("continuation stage eps={eps}, sigma={sigma:?}: {source}")]
    Stage {
        eps: f64,
        sigma: Option<f64>,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
