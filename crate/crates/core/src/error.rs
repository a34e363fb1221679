use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("index {index} out of range for domain of size {domain}")]
    IndexOutOfRange { index: usize, domain: usize },

    #[error("duplicate index {index}")]
    DuplicateIndex { index: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("cannot draw {requested} samples from {available}")]
    TooManySamples { requested: usize, available: usize },

    #[error("k-means needs {needed} distinct points with nonzero weight, found {available}")]
    InsufficientPoints { needed: usize, available: usize },

    #[error("factor columns are not orthonormal (max deviation {deviation:.3e})")]
    NotOrthonormal { deviation: f64 },

    #[error("matrix has zero Frobenius norm; relative error is undefined")]
    ZeroNorm,

    #[error("encoding error increased from pilot to follow-up ({axis}: {pilot} -> {followup})")]
    NegativeEncodingDrop {
        axis: &'static str,
        pilot: f64,
        followup: f64,
    },

    #[error("{variant} follow-up sampling failed: {source}")]
    Followup {
        variant: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("unknown method `{name}`; registered methods: {registry}")]
    UnknownMethod { name: String, registry: String },

    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }
}
