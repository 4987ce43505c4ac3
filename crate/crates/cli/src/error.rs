use std::path::PathBuf;

use cbf_core::CbfError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("config: {0}")]
    Missing(String),
    #[error("subcommand `{requested}` does not match experiment kind `{configured}` in the config")]
    KindMismatch { requested: String, configured: String },
    #[error(transparent)]
    Core(#[from] CbfError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;

pub(crate) fn at(line: usize, message: impl Into<String>) -> CliError {
    CliError::Config { line, message: message.into() }
}
