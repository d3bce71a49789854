use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate embedding: zero norm")]
    DegenerateEmbedding,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("undefined correlation: zero variance in {0}")]
    UndefinedCorrelation(&'static str),

    #[error("zero variance in {0}")]
    ZeroVariance(&'static str),

    #[error("rank-deficient design matrix (degree {degree}, {distinct} distinct inputs)")]
    RankDeficient { degree: usize, distinct: usize },

    #[error("no high-similarity pairs above cutoff {cutoff}")]
    NoSupport { cutoff: f64 },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("score matrix is not symmetric at ({row}, {col})")]
    NonSymmetric { row: usize, col: usize },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("format error: {0}")]
    Format(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Coarse classification used by front-ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Validation,
    Numeric,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidArgument(_) => ErrorClass::Usage,
            Error::DegenerateEmbedding
            | Error::UndefinedCorrelation(_)
            | Error::ZeroVariance(_)
            | Error::RankDeficient { .. }
            | Error::InsufficientData { .. } => ErrorClass::Numeric,
            _ => ErrorClass::Validation,
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse { line, message: message.into() }
    }
}
