use thiserror::Error;

use crate::solver::AdmmSolution;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid layout: {0}")]
    InvalidLayout(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("at least 2 samples are required, got {0}")]
    InsufficientSamples(usize),

    #[error("diagonal block of node {node} is singular and epsilon is zero")]
    SingularDiagonal { node: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("ADMM did not converge within {iterations} iterations (residual {residual:e})")]
    MaxIterationsExceeded {
        iterations: usize,
        residual: f64,
        best: Box<AdmmSolution>,
    },

    #[error("eigendecomposition failed to converge")]
    EigenFailure,
}

impl Error {
    /// Recovers the last iterate carried by a non-convergence error.
    pub fn into_best_iterate(self) -> Option<AdmmSolution> {
        match self {
            Error::MaxIterationsExceeded { best, .. } => Some(*best),
            _ => None,
        }
    }
}
