use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("unknown tokenizer `{0}`")]
    UnknownTokenizer(String),

    #[error("unknown policy `{0}`")]
    UnknownPolicy(String),

    #[error("unknown store `{0}`")]
    UnknownStore(String),

    #[error("unknown query type `{0}`")]
    UnknownQueryType(String),

    #[error("label mismatch: expected query `{expected}`, label is for `{found}`")]
    LabelMismatch { expected: String, found: String },

    #[error("missing ground-truth label for query `{0}`")]
    MissingLabel(String),

    #[error("query sets differ: {0}")]
    MismatchedIds(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("hash mismatch for {path}: manifest {expected}, actual {actual}")]
    HashMismatch {
        path: PathBuf,
        expected: String,
        actual: String,
    },

    #[error("external answerer: {0}")]
    External(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
