use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid array geometry: {0}")]
    Geometry(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error in {path} at line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("malformed data: {0}")]
    Format(String),

    #[error("protocol error from {backend}: {message}")]
    Protocol { backend: String, message: String },

    #[error("backend {backend} failed: {message}")]
    Backend {
        backend: String,
        status: Option<u16>,
        message: String,
    },

    #[error("startup failed: backend {backend}: {message}")]
    Startup { backend: String, message: String },

    #[error("no dominant frequency in audio block")]
    NoDominantFrequency,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image codec: {0}")]
    Image(#[from] image::ImageError),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI: 2 config, 3 backend, 4 data.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Parse { .. } | Error::Geometry(_) => 2,
            Error::Protocol { .. } | Error::Backend { .. } | Error::Startup { .. } => 3,
            Error::Input(_)
            | Error::Format(_)
            | Error::NoDominantFrequency
            | Error::Io { .. }
            | Error::Image(_) => 4,
        }
    }
}
