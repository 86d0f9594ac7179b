use daemonic_core::daemonic::EnsembleError;
use thiserror::Error;

use crate::config::ConfigError;
use crate::output::OutputError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("output error: {0}")]
    Output(#[from] OutputError),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("validation failed: {0}")]
    Validation(String),
}

impl CliError {
    /// 2 for configuration and output-location problems, 3 for numerical
    /// failures, 4 for failed validation.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Output(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Validation(_) => 4,
        }
    }
}

impl From<EnsembleError> for CliError {
    fn from(e: EnsembleError) -> Self {
        match e {
            EnsembleError::InvalidSpec(msg) => CliError::Config(ConfigError::new("ensemble", msg)),
            other => CliError::Numerical(other.to_string()),
        }
    }
}
