use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid parameters: {0}")]
    Invalid(String),

    #[error("validation failed: {0}")]
    ValidationFailed(String),

    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: lorachan_core::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Parse { .. } => 1,
            CliError::InsufficientData(_) | CliError::Invalid(_) => 2,
            CliError::ValidationFailed(_) => 3,
            CliError::Core { source, .. } => {
                use lorachan_core::Error as E;
                match source {
                    E::Io(_) | E::Json(_) | E::Parse { .. } | E::UnsupportedFormat(_) => 1,
                    _ => 2,
                }
            }
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

/// Attaches a description of what was being processed to core errors.
pub trait Context<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T, CliError>;
}

impl<T> Context<T> for lorachan_core::Result<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T, CliError> {
        self.map_err(|source| {
            let context = what();
            if source.is_insufficient_data() {
                CliError::InsufficientData(format!("{context}: {source}"))
            } else {
                CliError::Core { context, source }
            }
        })
    }
}
