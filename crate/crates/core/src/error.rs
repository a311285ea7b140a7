use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid chain geometry: {0}")]
    InvalidGeometry(String),

    #[error("site {site} is outside the chain [{min}, {max}]")]
    SiteOutOfRange { site: i64, min: i64, max: i64 },

    #[error("magnon pair ({l1}, {l2}) must satisfy l1 < l2")]
    UnorderedPair { l1: i64, l2: i64 },

    #[error("hard-core violation: site {0} occupied twice")]
    DoubleOccupancy(i64),

    #[error("index {index} out of range for basis of dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("sector mismatch: {0}")]
    WrongSector(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("operator is not Hermitian: entry ({row}, {col}) differs from its transpose by {diff:e}")]
    NotHermitian { row: usize, col: usize, diff: f64 },

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("Krylov propagation did not converge at step {step} (t = {time}): error estimate {estimate:e} after {dimension} vectors")]
    KrylovNotConverged { step: usize, time: f64, estimate: f64, dimension: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("time series sampling is not uniform at sample {0}")]
    NonUniformSampling(usize),

    #[error("no peaks found")]
    NoPeaks,

    #[error("total excitation weight is zero")]
    ZeroWeight,
}

pub type Result<T> = std::result::Result<T, Error>;
