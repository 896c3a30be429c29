use thiserror::Error;

/// Errors raised by tensor algebra, the recovery stages and the benchmark plumbing.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("mode {mode} out of range for order-{order} tensor")]
    ModeOutOfRange { mode: usize, order: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("kronecker operator would hold {entries} entries, above the guard of {guard}")]
    SizeGuard { entries: u128, guard: u128 },

    #[error("non-finite value in {stage} at iteration {iteration}")]
    NonFinite { stage: &'static str, iteration: usize },

    #[error("unknown recovery method `{0}`")]
    UnknownMethod(String),

    #[error("malformed tensor file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
