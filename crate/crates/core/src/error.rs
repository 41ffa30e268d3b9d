use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Shapes or channel counts that do not fit together.
    #[error("configuration error in {layer}: {message}")]
    Config { layer: String, message: String },

    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },

    /// API misuse: stale caches, mismatched tensors handed to a loss, bad settings.
    #[error("usage error: {0}")]
    Usage(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("uninitialized statistics in {0}: evaluation mode requires running statistics from training")]
    UninitializedStatistics(String),

    #[error("non-finite gradient in parameter {0}")]
    NonFiniteGradient(String),

    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),

    #[error("image error for {path}: {message}")]
    Image { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(layer: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            layer: layer.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("not a checkpoint (bad magic bytes)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    UnsupportedVersion(u32),
    #[error("truncated checkpoint: {0}")]
    Truncated(&'static str),
    #[error("inconsistent checkpoint: {0}")]
    Inconsistent(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
