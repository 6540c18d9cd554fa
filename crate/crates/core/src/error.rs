use std::io;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Input data does not have the required shape (too few timesteps, bad CSV rows, ...).
    #[error("malformed input: {0}")]
    MalformedInput(String),
    /// An argument lies outside its admissible domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// Not enough data to fit or train.
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    /// Configuration is incomplete or inconsistent (missing features, bad GA settings, ...).
    #[error("configuration error: {0}")]
    Configuration(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, source: io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::MalformedInput(e.to_string())
    }
}
