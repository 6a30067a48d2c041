use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("parse error in row {row}: {message}")]
    Parse { row: String, message: String },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("input too long: {len} tokens exceeds the maximum of {max}")]
    InputTooLong { len: usize, max: usize },

    #[error("empty stratum: no examples with at least {min_k} gold labels")]
    EmptyStratum { min_k: usize },

    #[error("non-finite loss at epoch {epoch}, batch {batch}: {value}")]
    NonFiniteLoss { epoch: usize, batch: usize, value: f64 },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("encoder error: {0}")]
    Encoder(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("image error: {0}")]
    Image(#[from] image::ImageError),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// True for errors caused by bad user input rather than runtime failure.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Usage(_) | Error::Schema(_) | Error::Parse { .. } | Error::EmptyStratum { .. }
        )
    }
}
