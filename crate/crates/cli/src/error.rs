use std::path::PathBuf;

use thiserror::Error;

/// Failures of a CLI run, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {reason}")]
    Artifact { path: PathBuf, reason: String },

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("{0}")]
    Pipeline(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verification(_) | CliError::Pipeline(_) => 1,
            CliError::Usage(_) | CliError::Config(_) | CliError::Artifact { .. } => 2,
            CliError::Io { .. } => 3,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn artifact(path: impl Into<PathBuf>, reason: impl ToString) -> Self {
        CliError::Artifact { path: path.into(), reason: reason.to_string() }
    }

    pub fn pipeline(e: impl std::fmt::Display) -> Self {
        CliError::Pipeline(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
