use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] ensemble_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),

    #[error("validation failed: {0}")]
    Validation(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Config(_) => 2,
            CliError::Core(e) if e.is_infeasible() => 3,
            CliError::Core(e) if e.is_divergence() => 4,
            CliError::Core(ensemble_core::Error::Config(_) | ensemble_core::Error::Domain(_)) => 2,
            CliError::Core(_) => 4,
            CliError::Io { .. } | CliError::Csv(_) => 5,
        }
    }
}
