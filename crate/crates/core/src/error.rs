use thiserror::Error;

use crate::gauss::Gaussian;

pub type Result<T, E = FilterError> = std::result::Result<T, E>;

/// Errors raised by the estimation library.
#[derive(Debug, Clone, Error)]
pub enum FilterError {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("{0} is not positive definite")]
    NotPositiveDefinite(&'static str),

    #[error("positive definiteness not restored with jitter up to {jitter_max:e}")]
    JitterExhausted { jitter_max: f64 },

    #[error("non-finite value when perturbing coordinate {coordinate}")]
    NonFinite { coordinate: usize },

    #[error("non-finite function output at evaluation point {index}")]
    NonFiniteOutput { index: usize },

    #[error("invalid sigma-point rule: n + lambda = {spread} must be positive")]
    InvalidRule { spread: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("gimbal lock: |cos(pitch)| = {cos_pitch:e}")]
    GimbalLock { cos_pitch: f64 },

    #[error("non-finite state at step {step}")]
    NonFiniteState { step: usize },

    #[error("update diverged at iteration {iteration}: {reason}")]
    Divergence {
        iteration: usize,
        reason: String,
        last_valid: Box<Gaussian>,
    },
}

impl FilterError {
    pub(crate) fn dim(context: &'static str, expected: usize, found: usize) -> Self {
        FilterError::DimensionMismatch {
            context,
            expected,
            found,
        }
    }
}
