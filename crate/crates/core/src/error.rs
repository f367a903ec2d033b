use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed lexicon at line {line}: {reason}")]
    MalformedLexicon { line: usize, reason: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("segmentation of {name:?} exceeds the enumeration cap of {cap}")]
    TooManySegmentations { name: String, cap: usize },

    #[error("missing required column {0:?}")]
    MissingColumn(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("index {index} out of range for vocabulary of size {size}")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("training record {0} has no hanzi given name")]
    MissingHanzi(usize),

    #[error("training diverged at epoch {epoch}, step {step}: non-finite loss ({detail})")]
    Diverged {
        epoch: usize,
        step: usize,
        detail: String,
    },

    #[error("no mapping to characters for syllable {0:?}")]
    UnknownMapping(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("missing prediction for truth record {0}")]
    MissingPrediction(usize),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad user input rather than a failure while
    /// doing the work.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::MalformedLexicon { .. }
                | Error::InvalidInput(_)
                | Error::MissingColumn(_)
                | Error::Config(_)
                | Error::MissingHanzi(_)
                | Error::DimensionMismatch { .. }
                | Error::Io { .. }
                | Error::TooManySegmentations { .. }
                | Error::MissingPrediction(_)
                | Error::UnknownMapping(_)
                | Error::Checkpoint(_)
                | Error::Csv(_)
                | Error::Json(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
