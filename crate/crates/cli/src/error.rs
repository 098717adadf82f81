use std::path::PathBuf;

use thiserror::Error;

/// Everything that can stop a command, with its process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("cannot read {path}: {message}")]
    Read { path: PathBuf, message: String },
    #[error("cannot write {path}: {message}")]
    Write { path: PathBuf, message: String },
    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: idsense_core::Error,
    },
    #[error("exact oracle refused: {0}")]
    GuardBreach(idsense_core::Error),
    #[error("estimator disagrees with the exhaustive oracle:\n{0}")]
    OracleMismatch(String),
}

impl CliError {
    pub fn core(context: impl Into<String>, source: idsense_core::Error) -> Self {
        CliError::Core {
            context: context.into(),
            source,
        }
    }

    /// 2 config/validation, 3 infeasible or zero capacity, 4 guard breach, 1 oracle mismatch.
    pub fn exit_code(&self) -> u8 {
        use idsense_core::Error as E;
        match self {
            CliError::Config(_) | CliError::Read { .. } | CliError::Write { .. } => 2,
            CliError::Core { source, .. } => match source {
                E::InfeasibleDistortion { .. } | E::ZeroCapacityChannel => 3,
                E::TooLargeToEnumerate { .. } => 4,
                _ => 2,
            },
            CliError::GuardBreach(_) => 4,
            CliError::OracleMismatch(_) => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Attaches a context string to core errors.
pub trait Context<T> {
    fn context(self, what: &str) -> CliResult<T>;
}

impl<T> Context<T> for idsense_core::Result<T> {
    fn context(self, what: &str) -> CliResult<T> {
        self.map_err(|e| CliError::core(what, e))
    }
}
