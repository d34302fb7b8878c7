//! Command-line driver for the affine Husimi engine.

pub mod commands;
pub mod config;
pub mod output;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("gate failed: {0}")]
    Gate(String),
    #[error("internal: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Gate(_) => 3,
            CliError::Internal(_) => 4,
        }
    }
}

impl From<affine_husimi::Error> for CliError {
    fn from(e: affine_husimi::Error) -> Self {
        use affine_husimi::Error as E;
        match e {
            E::Parameter(_) | E::Domain(_) => CliError::Config(e.to_string()),
            _ => CliError::Internal(e.to_string()),
        }
    }
}
