use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("projection did not converge after {iterations} iterations (residual {residual:e})")]
    ProjectionNotConverged { iterations: usize, residual: f64 },

    #[error("point is not on the domain boundary (distance {distance:e})")]
    NotOnBoundary { distance: f64 },

    #[error("initial value lies outside the closed domain (distance {distance:e})")]
    InitialOutsideDomain { distance: f64 },

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("time {t} outside [0, {horizon}]")]
    TimeOutOfRange { t: f64, horizon: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("time {0} is not a grid point")]
    NotAGridPoint(f64),

    #[error("invalid driver specification: {0}")]
    InvalidDriver(String),

    #[error("invalid coefficient: {0}")]
    InvalidCoefficient(String),

    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("time {0} is a fixed discontinuity of a deterministic driver")]
    FixedDiscontinuity(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("csv: {0}")]
    Csv(String),
}

pub type Result<T> = std::result::Result<T, Error>;
