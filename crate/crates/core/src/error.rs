use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("covariance is not positive definite (leading minor {index} has pivot {pivot:e})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("column {0} is constant and cannot be standardized")]
    ConstantColumn(usize),

    #[error("column {0} is identically zero")]
    ZeroColumn(usize),

    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error("{path}: row {row} has {found} fields, expected {expected}")]
    RaggedRow {
        path: PathBuf,
        row: usize,
        found: usize,
        expected: usize,
    },

    #[error("{path}: non-numeric value {value:?} at row {row}, column {column}")]
    NonNumeric {
        path: PathBuf,
        row: usize,
        column: usize,
        value: String,
    },

    #[error("{0}: file contains no data")]
    EmptyFile(PathBuf),

    #[error("signal magnitudes differ ({0} and {1}); the statistic needs a single magnitude")]
    MixedMagnitudes(f64, f64),

    #[error("the support is empty")]
    EmptySupport,

    #[error("rank {requested} is beyond the {available} enter events in the trace")]
    RankOutOfRange { requested: usize, available: usize },

    #[error("vertical ranking requires n > p (got n = {n}, p = {p})")]
    NotOverdetermined { n: usize, p: usize },

    #[error("Gram matrix is singular or ill-conditioned (condition estimate {0:e})")]
    SingularGram(f64),

    #[error("no admissible candidate: every remaining column is collinear with the active set")]
    NoAdmissibleCandidate,

    #[error("coordinate {index} is not finite")]
    NonFinite { index: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
