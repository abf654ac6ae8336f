use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_IO: u8 = 3;
pub const EXIT_NUMERIC: u8 = 4;
pub const EXIT_MODEL_FORMAT: u8 = 5;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}:{line}: {message}")]
    Config { path: PathBuf, line: usize, message: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{}: {message}", path.display())]
    ModelFormat { path: PathBuf, message: String },
    #[error("{}: {message}", path.display())]
    Report { path: PathBuf, message: String },
    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: randlink::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use randlink::Error as E;
        match self {
            CliError::Usage(_) | CliError::Config { .. } => EXIT_USAGE,
            CliError::Io { .. } | CliError::Report { .. } => EXIT_IO,
            CliError::ModelFormat { .. } => EXIT_MODEL_FORMAT,
            CliError::Core { source, .. } => match source {
                E::Io { .. } | E::Parse { .. } | E::EmptyDataset | E::SingleClass(_) => EXIT_IO,
                E::InvalidConfig(_) | E::InvalidRange { .. } | E::TooManyFolds { .. } => EXIT_USAGE,
                _ => EXIT_NUMERIC,
            },
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

/// Attaches a short description of what was being done to a core error.
pub trait Context<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T, CliError>;
}

impl<T> Context<T> for randlink::Result<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T, CliError> {
        self.map_err(|source| CliError::Core {
            context: what(),
            source,
        })
    }
}
