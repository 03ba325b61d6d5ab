use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch { expected: (u32, u32), found: (u32, u32) },

    #[error("invalid box: {0}")]
    InvalidBox(String),

    #[error("invalid RLE: {0}")]
    InvalidRle(String),

    #[error("union of an empty mask list has no dimensions")]
    EmptyUnion,

    #[error("containment is undefined for an empty mask")]
    EmptyMask,

    #[error("invalid label value {value} ({context})")]
    InvalidLabel { value: u8, context: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown class names without alias: {}", .0.join(", "))]
    UnknownClass(Vec<String>),

    #[error("image {0:?} not found")]
    MissingImage(String),

    #[error("no interchange record for image {0:?}")]
    MissingRecord(String),

    #[error("image {0:?} has no ground truth")]
    MissingGroundTruth(String),

    #[error("malformed interchange file {path}: {message}")]
    Malformed { path: PathBuf, message: String },

    #[error("unsupported interchange schema version {found} (supported: {supported})")]
    UnsupportedSchema { found: u64, supported: u64 },

    #[error("content hash mismatch for image {image_id:?}: stored {stored}, computed {computed}")]
    HashMismatch {
        image_id: String,
        stored: String,
        computed: String,
    },

    #[error("invalid interchange record for image {image_id:?}{}: {message}",
        .detection.map(|d| format!(", detection {d}")).unwrap_or_default())]
    InvalidRecord {
        image_id: String,
        detection: Option<usize>,
        message: String,
    },

    #[error("invalid dataset: {0}")]
    Dataset(String),

    #[error("invalid PNG {path}: {message}")]
    Png { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the environment (files, permissions) rather than of
    /// the data or arguments.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}
