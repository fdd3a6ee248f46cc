//! Failure classes and their exit codes.

use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("argument error: {0}")]
    Usage(String),
    #[error("{op} failed: {source}")]
    Engine {
        op: &'static str,
        #[source]
        source: regionboot::Error,
    },
    #[error(transparent)]
    Io(#[from] anyhow::Error),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::from(2),
            CliError::Engine { .. } => ExitCode::from(3),
            CliError::Io(_) => ExitCode::from(1),
        }
    }
}

/// Tags engine errors with the operation that raised them.
pub trait EngineContext<T> {
    fn during(self, op: &'static str) -> Result<T, CliError>;
}

impl<T> EngineContext<T> for regionboot::Result<T> {
    fn during(self, op: &'static str) -> Result<T, CliError> {
        self.map_err(|source| CliError::Engine { op, source })
    }
}
