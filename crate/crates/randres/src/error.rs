//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RandresError {
    /// A parameter violated a documented precondition.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    /// Adaptive quadrature exhausted its subdivision budget.
    #[error("quadrature did not converge: error estimate {achieved:.3e} exceeds tolerance {requested:.3e}")]
    QuadratureNonConvergent { achieved: f64, requested: f64 },

    /// A Monte Carlo estimator failed to reach its requested accuracy.
    #[error("estimator did not converge: {0}")]
    EstimatorNonConvergent(String),

    /// Dense linear solve failed (singular or not positive definite).
    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    /// Operand shapes do not line up.
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),

    /// Configuration file or flag validation failure.
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl RandresError {
    pub fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        RandresError::InvalidParam {
            name,
            reason: reason.into(),
        }
    }

    /// Process exit code for the CLI: 2 for config errors, 3 for numerical
    /// non-convergence, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            RandresError::Config(_) | RandresError::InvalidParam { .. } => 2,
            RandresError::QuadratureNonConvergent { .. }
            | RandresError::EstimatorNonConvergent(_)
            | RandresError::LinearSolve(_) => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, RandresError>;
