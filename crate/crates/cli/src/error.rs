use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    MissingFile {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{op} failed: {source}")]
    Compute {
        op: &'static str,
        source: gibbs_core::Error,
    },
    #[error("check failed: {0}")]
    Check(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::MissingFile { .. } | CliError::Parse { .. } | CliError::Config(_) => 2,
            CliError::Compute { .. } | CliError::Check(_) | CliError::Io { .. } => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Tags a core error with the operation that raised it.
pub trait Op<T> {
    fn op(self, name: &'static str) -> CliResult<T>;
}

impl<T> Op<T> for gibbs_core::Result<T> {
    fn op(self, name: &'static str) -> CliResult<T> {
        self.map_err(|source| CliError::Compute { op: name, source })
    }
}
