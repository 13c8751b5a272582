use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CpeError {
    #[error("CPE URI must start with \"cpe:/\": {0:?}")]
    BadPrefix(String),
    #[error("invalid CPE part {0:?} (expected o, a or h)")]
    BadPart(String),
    #[error("CPE URI has more than 7 components; offending segment {segment:?}")]
    TooManyComponents { segment: String },
}

#[derive(Debug, Error)]
pub enum InventoryError {
    #[error("cannot read inventory {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("inventory is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("inventory record {index}: missing or empty `name`")]
    MissingName { index: usize },
    #[error("inventory record {index}: unknown kind {kind:?}")]
    UnknownKind { index: usize, kind: String },
    #[error("inventory record {index}: {message}")]
    BadRecord { index: usize, message: String },
}

#[derive(Debug, Error)]
pub enum DbError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed NVD feed {path}: {message}")]
    Feed { path: PathBuf, message: String },
    #[error("malformed exploit map {path}: {message}")]
    ExploitMap { path: PathBuf, message: String },
    #[error("corrupt database file {path}: {message}")]
    Store { path: PathBuf, message: String },
    #[error("cache entry generation {entry} does not match current generation {current}")]
    GenerationMismatch { entry: u64, current: u64 },
}

impl DbError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        DbError::Io {
            path: path.into(),
            source,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScanError {
    #[error("vulnerability database is not initialized (generation 0)")]
    Uninitialized,
    #[error("accuracy is undefined for an empty ground-truth set")]
    EmptyGroundTruth,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GenerationError {
    #[error("required candidate set `{0}` is empty")]
    EmptyCandidates(&'static str),
    #[error("candidate set `{0}` contains an empty member")]
    EmptyMember(&'static str),
}
