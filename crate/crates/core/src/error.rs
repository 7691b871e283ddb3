use thiserror::Error;

/// Failures of the pool algebra and objective plumbing.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoreError {
    #[error("dimension mismatch: expected {expected} values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("candidate born at iteration {iteration} has not been evaluated")]
    Unevaluated { iteration: usize },
    #[error("pool holds {len} members, below its capacity {capacity}")]
    Underfull { len: usize, capacity: usize },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("objective `{name}` returned a non-finite value at {x:?}")]
    NonFinite { name: String, x: Vec<f64> },
    #[error("objective `{name}` domain error: {reason}")]
    Domain { name: String, reason: String },
    #[error("evaluation budget exhausted: {used} of {max} used, {requested} more requested")]
    BudgetExhausted { used: usize, max: usize, requested: usize },
    #[error("csv: {0}")]
    Csv(String),
}

pub type Result<T, E = CoreError> = std::result::Result<T, E>;
