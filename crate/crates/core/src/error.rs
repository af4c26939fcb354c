use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to parse {path} (match {match_id}): {message}")]
    Parse {
        path: PathBuf,
        match_id: String,
        message: String,
    },

    #[error("match {match_id}: invalid {field}: {message}")]
    Invariant {
        match_id: String,
        field: String,
        message: String,
    },

    #[error("match {match_id}: feature file {path} is missing")]
    MissingFeatureFile { match_id: String, path: PathBuf },

    #[error("match {match_id}: commentaries[{index}] has no ground-truth timestamp (t_gt)")]
    MissingGroundTruth { match_id: String, index: usize },

    #[error("match {match_id}: commentaries[{index}] has no embedding")]
    MissingEmbedding { match_id: String, index: usize },

    #[error("malformed binary file {path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    Dimension {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("length mismatch: predictions have {pred} entries, ground truth has {gt}")]
    LengthMismatch { pred: usize, gt: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("{matrix} row {row} has zero norm")]
    ZeroNorm { matrix: &'static str, row: usize },

    #[error("label row {row} has no positive entry")]
    NoPositive { row: usize },

    #[error("non-finite values in {0}")]
    NonFinite(String),

    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("commentary {index}: candidate window contains no frames")]
    EmptyWindow { index: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("endpoint error: {0}")]
    Endpoint(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invariant(
        match_id: impl Into<String>,
        field: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        Error::Invariant {
            match_id: match_id.into(),
            field: field.into(),
            message: message.into(),
        }
    }
}
