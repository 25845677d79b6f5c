use thiserror::Error;

/// Errors raised by the sampling toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Invalid or infeasible configuration (bounds, schemes, budgets).
    #[error("configuration error: {0}")]
    Config(String),

    /// An operation was called outside its preconditions.
    #[error("usage error: {0}")]
    Usage(String),

    /// A numeric argument lies outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Responses or coordinates that cannot be scored (NaN, infinities).
    #[error("data error: {0}")]
    Data(String),

    #[error("point {coords:?} lies outside the design space on axis {axis}")]
    OutOfBounds { coords: Vec<f64>, axis: usize },

    #[error(
        "point {coords:?} duplicates design point {existing} (normalized distance {distance:e})"
    )]
    Duplicate {
        coords: Vec<f64>,
        existing: usize,
        distance: f64,
    },

    #[error("evaluation budget of {budget} points exhausted")]
    BudgetExhausted { budget: usize },

    /// The black-box evaluator failed. The proposed point is kept so the
    /// caller can retry.
    #[error("evaluator failed at {point:?}: {message}")]
    Evaluation { point: Vec<f64>, message: String },

    #[error("state serialization error: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;
