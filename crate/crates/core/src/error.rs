use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("database holds no transactions")]
    EmptyDatabase,

    #[error("malformed transaction at line {line}: {reason}")]
    MalformedTransaction { line: usize, reason: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("partition count {partitions} out of range 1..={units}")]
    PartitionCountOutOfRange { partitions: usize, units: usize },

    #[error("database and increment sizes are both zero")]
    ZeroSizes,

    #[error("cycle length mismatch: state uses {state}, increment uses {increment}")]
    CycleMismatch { state: u32, increment: u32 },

    #[error("no support available for itemset {0}")]
    MissingSupport(String),

    #[error("i/o failure on {path}: {source}")]
    IoFailure {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("state format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("corrupt state at record {record}: {reason}")]
    CorruptState { record: usize, reason: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::IoFailure {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn corrupt(record: usize, reason: impl Into<String>) -> Self {
        Error::CorruptState {
            record,
            reason: reason.into(),
        }
    }
}
