use thiserror::Error;

/// Errors produced by the optimizer and its numerical building blocks.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("matrix is not symmetric (max relative asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid weights: {0}")]
    BadWeights(String),

    #[error("degrees of freedom {nu} must exceed p + 1 = {}", .dim + 1)]
    DegenerateDof { nu: f64, dim: usize },

    #[error("invalid prior: {0}")]
    InvalidPrior(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("function `{id}` requires dimension {required}, got {got}")]
    ArityMismatch {
        id: String,
        required: usize,
        got: usize,
    },

    #[error("unknown function `{0}`")]
    UnknownFunction(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(Box<Error>),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dims(expected: usize, got: usize) -> Self {
        Error::DimensionMismatch { expected, got }
    }
}
