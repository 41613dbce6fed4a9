use thiserror::Error;

use crate::grading::GradingError;
use crate::polyalg::PolyError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Grading(#[from] GradingError),
    #[error("generator {index} is not homogeneous: {reason}")]
    NotHomogeneous { index: usize, reason: String },
    #[error("generators use {got} variables, expected {expected}")]
    VariableCount { expected: usize, got: usize },
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),
    #[error("no monomial initial ideal after {attempts} random weight vectors (ties: {})", witnesses.join("; "))]
    RetryCapExhausted { attempts: u32, witnesses: Vec<String> },
    #[error("flatness certificate failed at m={m}, alpha={alpha:?}: dim S/I = {source_dim}, dim S/I0 = {central_dim}")]
    FlatnessViolated { m: u32, alpha: Vec<i64>, source_dim: u64, central_dim: u64 },
    #[error("ideal is not monomial: {0}")]
    NotMonomial(String),
    #[error("{0}")]
    Invalid(String),
    #[error("xi is too close to the Reeb cone boundary for a finite-difference step along eta: {0}")]
    FdStep(String),
    #[error("optimizer left the Reeb cone: volume blows up near the half-space of `{var}` (margin {margin:e})")]
    Divergence { var: String, margin: f64 },
    #[error("integer overflow in {0}")]
    Overflow(&'static str),
}

impl Error {
    /// Budget, cap or overflow failures (as opposed to bad input).
    pub fn is_resource_limit(&self) -> bool {
        matches!(self, Error::ResourceLimit(_) | Error::RetryCapExhausted { .. } | Error::Overflow(_))
    }

    /// Failures that indicate a bug rather than bad input or a cap.
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::FlatnessViolated { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
