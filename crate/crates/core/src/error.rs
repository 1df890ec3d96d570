use thiserror::Error;

/// Errors produced by the estimation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("incompatible shapes: {0}")]
    IncompatibleShapes(String),
    #[error("invalid trimming count h={h} for n={n}")]
    InvalidH { h: usize, n: usize },
    #[error("line search failed: step shrank below {0:e} without descent")]
    LineSearchFailed(f64),
    #[error("estimator and dataset are incompatible: {0}")]
    IncompatibleData(String),
    #[error("{count} subsets exceed the enumeration limit {limit}")]
    TooManySubsets { count: u128, limit: u128 },
    #[error("curvature must be positive, got {0}")]
    NonPositiveCurvature(f64),
    #[error("invalid counts: {0}")]
    InvalidCounts(String),
    #[error("tau must exceed 2, got {0}")]
    InvalidTau(f64),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
