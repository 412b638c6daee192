use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: malformed JSON: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: schema error at `{field}`: {message}")]
    Schema {
        line: usize,
        field: String,
        message: String,
    },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("missing embedding for text with hash {hash:016x}")]
    MissingEmbedding { hash: u64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("zero vector has no direction")]
    ZeroVector,

    #[error("invalid k = {k} for {n} points")]
    InvalidK { k: usize, n: usize },

    #[error("silhouette undefined: need at least two clusters, found {0}")]
    SilhouetteUndefined(usize),

    #[error("K range empty: [{kmin}, {kmax}] for {points} points")]
    EmptyKRange {
        kmin: usize,
        kmax: usize,
        points: usize,
    },

    #[error("document `{doc_key}`: {source}")]
    Document {
        doc_key: String,
        #[source]
        source: Box<Error>,
    },

    #[error("record `{record_id}`: {source}")]
    Record {
        record_id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("remote service {endpoint}: {message}")]
    Remote { endpoint: String, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn schema(
        line: usize,
        field: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        Error::Schema {
            line,
            field: field.into(),
            message: message.into(),
        }
    }

    /// Whether the root cause is a remote service failure.
    pub fn is_remote(&self) -> bool {
        match self {
            Error::Remote { .. } => true,
            Error::Document { source, .. } | Error::Record { source, .. } => source.is_remote(),
            _ => false,
        }
    }
}
