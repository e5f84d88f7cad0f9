use std::path::PathBuf;

use sst_core::ErrorKind;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] sst_core::Error),

    #[error("{0}")]
    Input(String),

    #[error("{}: {source}", path.display())]
    Read { path: PathBuf, source: std::io::Error },

    #[error("{}: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },

    #[error("writing {}: {source}", path.display())]
    Write { path: PathBuf, source: std::io::Error },
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    /// 2 validation, 3 precondition, 4 enumeration cap, 1 output failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) => match e.kind() {
                ErrorKind::Validation => 2,
                ErrorKind::Precondition => 3,
                ErrorKind::CapExceeded => 4,
            },
            CliError::Input(_) | CliError::Read { .. } | CliError::Json { .. } => 2,
            CliError::Write { .. } => 1,
        }
    }
}
