use thiserror::Error;

/// Errors raised by distgame operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: logit[{index}] = {value} is not finite")]
    InvalidParameter { index: usize, value: f64 },

    #[error("support must have at least 2 outcomes, got {0}")]
    SupportTooSmall(usize),

    #[error("duplicate outcome identifier {0:?}")]
    DuplicateOutcome(String),

    #[error("probability[{index}] = {value} is not strictly positive and finite")]
    NotPositive { index: usize, value: f64 },

    #[error("probabilities sum to {sum}, expected 1 within {tolerance}")]
    NotNormalized { sum: f64, tolerance: f64 },

    #[error("support size mismatch: expected {expected}, got {found}")]
    SupportMismatch { expected: usize, found: usize },

    #[error("outcome index {index} out of range for support of size {k}")]
    IndexOutOfRange { index: usize, k: usize },

    #[error("vector length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("invalid sample count {0}; need at least 1")]
    InvalidSampleCount(usize),

    #[error("invalid range: {0}")]
    InvalidRange(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("trajectory is empty")]
    EmptyTrajectory,
}

pub type Result<T> = std::result::Result<T, Error>;
