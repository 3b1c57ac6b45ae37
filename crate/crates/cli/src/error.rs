use std::path::PathBuf;

use thiserror::Error;

/// Failure classes of a run, each with its own exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Usage { path: String, message: String },

    #[error("{context}: {source}")]
    Numerical {
        context: String,
        #[source]
        source: threewave::Error,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn usage(path: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Usage {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn numerical(context: impl Into<String>, source: threewave::Error) -> Self {
        CliError::Numerical {
            context: context.into(),
            source,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage { .. } => 2,
            CliError::Numerical { .. } => 3,
            CliError::Io { .. } => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Attaches a context label to library errors.
pub(crate) trait Context<T> {
    fn context(self, what: &str) -> Result<T>;
}

impl<T> Context<T> for threewave::Result<T> {
    fn context(self, what: &str) -> Result<T> {
        self.map_err(|e| CliError::numerical(what, e))
    }
}
