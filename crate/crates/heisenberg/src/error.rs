//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors raised by constant evaluation, grid calculus, spectral analysis
/// and the inequality checks.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside the admissible window of a formula or theorem.
    #[error("parameter out of range: {0}")]
    Parameter(String),

    /// Argument outside the mathematical domain of a special function.
    #[error("domain error: {0}")]
    Domain(String),

    /// Two objects that must share a dimension do not.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A spectral routine received a function that is not radial in the first stratum.
    #[error("function is not radial in the horizontal variables (relative asymmetry {0:.3e})")]
    NonRadial(f64),

    /// A normalization was requested for the zero function.
    #[error("function vanishes identically on the grid")]
    ZeroFunction,

    /// A singular weight is not locally integrable.
    #[error("weight is not integrable: {0}")]
    NonIntegrable(String),

    /// Explicit time stepping with a step above the stability limit.
    #[error("time step {dt:.3e} exceeds the stability limit {limit:.3e}")]
    Cfl { dt: f64, limit: f64 },

    /// A ball does not contain any grid node or sticks out of the grid box.
    #[error("invalid ball: {0}")]
    Ball(String),

    /// Malformed serialized data.
    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}
