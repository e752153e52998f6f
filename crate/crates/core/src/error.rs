use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the library.
///
/// Variants are grouped by the layer that usually produces them, but every
/// layer may propagate any of them.
#[derive(Debug, Error)]
pub enum Error {
    #[error("input is empty")]
    EmptyInput,
    #[error("need at least {needed} values, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("invalid range: {0}")]
    InvalidRange(String),
    #[error("variance must be non-negative, got {0}")]
    InvalidVariance(f64),
    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("negative entry {value} at index {index} with sample-mean cut-off")]
    NegativeInput { index: usize, value: f64 },
    #[error("value {value} at index {index} is outside [0, 1]")]
    OutOfRange { index: usize, value: f64 },
    #[error("state not initialized: {0}")]
    StateNotInitialized(&'static str),
    #[error("instance too large for exact enumeration: {units} units (limit {limit})")]
    Intractable { units: usize, limit: usize },
    #[error("batch is empty")]
    EmptyBatch,
    #[error("data set is empty")]
    EmptyData,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("no foreground pixel below/above threshold {0}")]
    NoForeground(f64),
    #[error("need at least 2 samples to concatenate, got {0}")]
    InsufficientSamples(usize),
    #[error("metric `{0}` is not finite")]
    NonFiniteMetric(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by the filesystem rather than by bad input.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
