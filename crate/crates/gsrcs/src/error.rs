use std::path::PathBuf;

use gsrcs_core::ReconstructError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
    #[error("{path}:{line}: {message}")]
    Config {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("invalid plan: {0}")]
    Plan(String),
    #[error("{path}: malformed measurements file: {message}")]
    MeasurementsFormat { path: PathBuf, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Core(#[from] gsrcs_core::Error),
    #[error("reconstruction failed: {0}")]
    Reconstruct(#[from] ReconstructError),
    #[error("no run succeeded: every input was skipped")]
    AllSkipped,
}

pub type Result<T> = std::result::Result<T, HarnessError>;

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> HarnessError {
    let path = path.into();
    move |source| HarnessError::Io { path, source }
}
