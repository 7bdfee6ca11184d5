//! Configuration, CSV reports and the `imex` command line around
//! [`imex_core`].
//!
//! Exit codes: 0 success, 1 IO failure, 2 configuration error, 3 blow-up,
//! 4 convergence check failed, 5 self-check failed.

pub mod commands;
pub mod config;
pub mod io;

pub use config::{Scenario, ScenarioConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("blow-up: {0}")]
    BlowUp(String),
    #[error("convergence check failed: {0}")]
    ConvergenceFailed(String),
    #[error("self-check failed: {0}")]
    SelfCheckFailed(String),
    #[error("{0}")]
    Io(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::BlowUp(_) => 3,
            CliError::ConvergenceFailed(_) => 4,
            CliError::SelfCheckFailed(_) => 5,
        }
    }
}

fn is_blow_up(e: &imex_core::Error) -> bool {
    use imex_core::Error;
    match e {
        Error::BlowUp { .. } | Error::BeyondBlowUp { .. } => true,
        Error::AtLevel { source, .. } => is_blow_up(source),
        _ => false,
    }
}

impl From<imex_core::Error> for CliError {
    fn from(e: imex_core::Error) -> Self {
        if is_blow_up(&e) {
            CliError::BlowUp(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}
