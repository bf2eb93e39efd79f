use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("training failed: {0}")]
    Training(String),

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("corrupt model file: {0}")]
    CorruptModel(String),

    #[error("unsupported model version {found} (expected {expected})")]
    ModelVersion { found: u64, expected: u64 },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error(transparent)]
    Stream(#[from] std::io::Error),
}

/// Broad failure class, used by the command line to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Io,
    Contract,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Geometry(_)
            | Error::Parse { .. }
            | Error::Validation(_)
            | Error::Config(_)
            | Error::Training(_)
            | Error::CorruptModel(_)
            | Error::ModelVersion { .. } => ErrorKind::Validation,
            Error::Io { .. } | Error::Image { .. } | Error::Stream(_) => ErrorKind::Io,
            Error::Contract(_) => ErrorKind::Contract,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Re-attach a path to a stream-level I/O failure.
    pub(crate) fn with_path(self, path: &std::path::Path) -> Self {
        match self {
            Error::Stream(source) => Error::io(path, source),
            other => other,
        }
    }
}
