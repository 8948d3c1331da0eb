use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("mode count mismatch: {left} vs {right}")]
    ModeMismatch { left: usize, right: usize },

    #[error("hermitian symmetry violated by {defect:e} (tolerance {tolerance:e})")]
    Symmetry { defect: f64, tolerance: f64 },

    #[error("control {values:?} lies outside the admissible set")]
    Constraint { values: Vec<f64> },

    #[error(
        "measure is not a probability density: zeroth coefficient {found} (expected {expected})"
    )]
    Normalization { found: f64, expected: f64 },

    #[error("time grid mismatch: {0}")]
    GridMismatch(String),

    #[error("solver diverged at t = {time}: coefficient magnitude {magnitude:e}")]
    Divergence { time: f64, magnitude: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
