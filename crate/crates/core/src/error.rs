use thiserror::Error;

/// Errors surfaced by the simulator, the learning code and the harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("{origin}: {message}")]
    Parse { origin: String, message: String },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config { field: field.into(), message: message.into() }
    }
}

macro_rules! ensure {
    ($cond:expr, $variant:ident, $($arg:tt)+) => {
        if !$cond {
            return Err($crate::error::Error::$variant(format!($($arg)+)));
        }
    };
}
pub(crate) use ensure;
