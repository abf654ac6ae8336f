use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the numeric core, the data pipeline and the models.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("matrix must have at least one row and one column, got {rows}x{cols}")]
    EmptyMatrix { rows: usize, cols: usize },
    #[error("buffer of length {len} cannot fill a {rows}x{cols} matrix")]
    BufferLength { rows: usize, cols: usize, len: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("lambda must be positive for primal/dual ridge, got {0}; use the pseudoinverse for lambda = 0")]
    ZeroLambda(f64),
    #[error("lambda must be non-negative, got {0}")]
    NegativeLambda(f64),
    #[error("matrix is not positive definite (pivot {pivot} = {value})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("invalid range [{lo}, {hi}]: lower bound must be below upper bound")]
    InvalidRange { lo: f64, hi: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("dataset needs at least two classes, found {0}")]
    SingleClass(usize),
    #[error("cannot build {k} folds from {samples} samples")]
    TooManyFolds { k: usize, samples: usize },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("statistics: {0}")]
    Stats(String),
    #[error("F statistic undefined: chi-squared {chi_squared} reaches M(m-1) = {bound}")]
    DegenerateFStatistic { chi_squared: f64, bound: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
