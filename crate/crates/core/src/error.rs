use nalgebra::DVector;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not symmetric (max asymmetry {asymmetry:.3e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("point outside the generator domain: {0}")]
    Domain(String),

    #[error("unsupported combination: {0}")]
    Unsupported(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    /// The inner surrogate minimization stopped before reaching its tolerance.
    #[error("inner solver did not converge after {iterations} iterations (gradient norm {gradient_norm:.3e})")]
    InnerNonconvergence {
        iterations: usize,
        gradient_norm: f64,
        last_iterate: DVector<f64>,
    },

    #[error("scalar root finder failed: {0}")]
    RootFinding(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
