//! Error type shared by the indexing and retrieval stages.

use std::path::PathBuf;

use thiserror::Error;

use crate::backends::BackendError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("document is empty")]
    EmptyDocument,

    #[error("invalid chunk configuration: overlap {overlap} must be smaller than chunk size {chunk_size}")]
    InvalidChunkConfig { chunk_size: usize, overlap: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A backend failed during indexing. `progress` describes how far the
    /// build got before the failure.
    #[error("indexing failed ({progress}): {source}")]
    IndexingFailed {
        progress: String,
        #[source]
        source: BackendError,
    },

    #[error("embedding dimension mismatch: expected {expected}, got {actual}")]
    EmbeddingDimensionMismatch { expected: usize, actual: usize },

    #[error("tree node {0} not found")]
    NodeNotFound(usize),

    #[error("entity '{0}' is not a graph vertex")]
    VertexNotFound(String),

    #[error("index is not built")]
    IndexNotBuilt,

    #[error(transparent)]
    Backend(#[from] BackendError),

    #[error("index format version {found} is not supported (expected {expected})")]
    VersionMismatch { expected: u32, found: u32 },

    #[error("corrupt index: {0}")]
    CorruptIndex(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
