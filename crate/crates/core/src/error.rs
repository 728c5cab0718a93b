use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum BsarmaError {
    #[error("{func}: argument {value} outside its domain ({expected})")]
    Domain {
        func: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("series of length {n} is too short: need more than {required} observations")]
    InsufficientData { n: usize, required: usize },

    #[error("invalid model order: {0}")]
    InvalidOrder(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("covariance matrix unavailable: information matrix is singular")]
    CovarianceUnavailable,

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("degrees of freedom must be at least 1 (got {0})")]
    DegreesOfFreedom(i64),

    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(String),

    #[error("row {row}: value {value} is not strictly inside (0, 1)")]
    BoundaryValue { row: usize, value: f64 },

    #[error("input error: {0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, BsarmaError>;
