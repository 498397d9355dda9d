//! Crate-wide error type.

use std::path::PathBuf;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid utf-8 byte sequence at offset {offset}")]
    InvalidUtf8 { offset: usize },

    #[error("{path}:{line}: {message}")]
    ParseLine {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: failed to parse json: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("row {row}: missing field `{field}`")]
    MissingField { row: usize, field: String },

    #[error("duplicate record id `{id}`")]
    DuplicateId { id: String },

    #[error("unknown label `{label}`")]
    UnknownLabel { label: String },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("alpha must lie in [0, 1], got {0}")]
    AlphaOutOfRange(f64),

    #[error("deletion probability must lie in [0, 1], got {0}")]
    ProbabilityOutOfRange(f64),

    #[error("invalid fold count {k} for {records} records")]
    InvalidFolds { k: usize, records: usize },

    #[error("plan target {target} for `{label}` is below current count {count}")]
    PlanTargetBelowCount {
        label: String,
        target: usize,
        count: usize,
    },

    #[error("plan references label `{label}` absent from the corpus")]
    PlanLabelMissing { label: String },

    #[error("no augmentable (non-empty) records for label `{label}`")]
    NoEligibleRecords { label: String },

    #[error("vocabulary is empty after filtering")]
    EmptyVocabulary,

    #[error("training data contains a single class")]
    SingleClass,

    #[error("loss became non-finite at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("model/vocabulary hash mismatch: model expects {expected}, vocabulary is {got}")]
    VocabHashMismatch { expected: String, got: String },

    #[error("{0}")]
    Config(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for filesystem-level failures, as opposed to validation errors.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}
