use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("functions live on different graphs")]
    GraphMismatch,
    #[error("length {got} does not match expected length {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("node index {index} out of range for a graph with {n} nodes")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("node {0} has zero degree")]
    ZeroDegree(usize),
    #[error("total degree is zero")]
    ZeroTotalDegree,
    #[error("graph is disconnected")]
    Disconnected,
    #[error("source coefficients sum to {0:e}, expected zero")]
    Incompatible(f64),
    #[error("iteration did not converge after {iterations} steps (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),
    #[error("assumption violated: {0}")]
    Assumption(String),
    #[error("point lies outside the domain")]
    OutsideDomain,
    #[error("conflicting labels at node {0}")]
    ConflictingLabels(usize),
    #[error("rejection sampler acceptance rate {0:e} is too low")]
    LowAcceptance(f64),
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
