use thiserror::Error;

/// Errors surfaced by model construction and numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates a documented precondition.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Vector or matrix sizes do not match the requested geometry.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Not enough data to run the requested estimator or test.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// A numerical routine failed to converge or produced non-finite output.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
