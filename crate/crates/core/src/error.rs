use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the engine can report.
///
/// Variants are grouped into coarse classes by [`Error::class`] so that
/// front ends can map them to exit codes or HTTP statuses.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("duplicate document id {0:?}")]
    DuplicateId(String),

    #[error("document {id:?} has {found} features, expected {expected}")]
    RaggedFeatures {
        id: String,
        expected: usize,
        found: usize,
    },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("vocabulary is empty after frequency filtering")]
    EmptyVocabulary,

    #[error("corpus has no training documents")]
    EmptyTrainSplit,

    #[error("shape mismatch: expected {expected}, found {found}")]
    Shape { expected: usize, found: usize },

    #[error("malformed model file: {0}")]
    Format(String),

    #[error("documents lack image features: {}", .0.join(", "))]
    MissingFeatures(Vec<String>),

    #[error("no token of {0:?} can be embedded")]
    Unembeddable(Vec<String>),

    #[error("vector has zero norm")]
    ZeroNorm,

    #[error("query terms cancel out (norm below 1e-9)")]
    DegenerateQuery,

    #[error("unknown item id {0:?}")]
    UnknownItem(String),

    #[error("training diverged: {0}")]
    Diverged(String),

    #[error("statistic undefined: {0}")]
    Undefined(String),

    #[error("protocol prerequisites not met: {0}")]
    Protocol(String),
}

/// Coarse error classes, stable across releases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorClass {
    Io,
    Parse,
    Validation,
    Config,
    Format,
    Training,
    DegenerateQuery,
    Unembeddable,
    NotFound,
    Undefined,
    Protocol,
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Io { .. } => ErrorClass::Io,
            Error::Parse { .. } => ErrorClass::Parse,
            Error::DuplicateId(_)
            | Error::RaggedFeatures { .. }
            | Error::Invalid(_)
            | Error::Shape { .. }
            | Error::MissingFeatures(_)
            | Error::ZeroNorm => ErrorClass::Validation,
            Error::Config(_) => ErrorClass::Config,
            Error::Format(_) => ErrorClass::Format,
            Error::EmptyVocabulary | Error::EmptyTrainSplit | Error::Diverged(_) => {
                ErrorClass::Training
            }
            Error::DegenerateQuery => ErrorClass::DegenerateQuery,
            Error::Unembeddable(_) => ErrorClass::Unembeddable,
            Error::UnknownItem(_) => ErrorClass::NotFound,
            Error::Undefined(_) => ErrorClass::Undefined,
            Error::Protocol(_) => ErrorClass::Protocol,
        }
    }
}
