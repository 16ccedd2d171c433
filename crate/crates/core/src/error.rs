use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("sparse-design estimation unsupported: dense score estimation needs a common regular grid")]
    UnsupportedDesign,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("rank error: {0}")]
    Rank(String),

    #[error("matrix is not positive definite ({0})")]
    NotPositiveDefinite(String),

    #[error("numerical failure while updating column {column}: {reason}")]
    ColumnUpdate { column: usize, reason: String },

    #[error("sweep {sweep}: {source}")]
    Sweep {
        sweep: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("chain would store {requested} bytes, over the {budget}-byte sample budget")]
    StorageBudget { requested: u64, budget: u64 },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: duplicate observation for subject {subject}, node {node}, time {time} (lines {first} and {second})")]
    DuplicateObservation {
        path: PathBuf,
        subject: String,
        node: String,
        time: f64,
        first: usize,
        second: usize,
    },

    #[error("chain archive version {found} is not supported (expected {expected})")]
    ArchiveVersion { found: u32, expected: u32 },

    #[error("chain archive checksum failure: {0}")]
    Checksum(String),

    #[error("invalid archive: {0}")]
    Archive(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown graph format {0:?} (expected \"dot\" or \"csv\")")]
    UnknownFormat(String),

    #[error("I/O error on {path}: {source}")]
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
