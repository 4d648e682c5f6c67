use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point {point:?} lies outside the unit cube")]
    Domain { point: Vec<f64> },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid wavelet index: {0}")]
    InvalidIndex(String),

    #[error("rejection sampler gave up after {attempts} attempts: {reason}")]
    RejectionBudget { attempts: usize, reason: String },

    #[error("quadrature did not converge at {0}")]
    Quadrature(String),

    #[error("linear system is ill-conditioned (condition estimate {condition:e})")]
    IllConditioned { condition: f64 },

    #[error("network construction failed: {0}")]
    Construction(String),

    #[error("training diverged at epoch {epoch} (loss {loss})")]
    Diverged { epoch: usize, loss: f64 },

    #[error("not enough usable points for a rate fit ({0} < 4)")]
    TooFewPoints(usize),

    #[error("{0}")]
    Infeasible(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
