//! Experiment harness: config loading, Monte-Carlo sweeps and CSV/JSON output.

pub mod commands;
pub mod config;
pub mod format;

use thiserror::Error;

pub use commands::{Axis, Command, Common};
pub use config::ExperimentConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("not converged: {0}")]
    NotConverged(String),
    #[error("{0}")]
    Solver(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::NotConverged(_) => 4,
            CliError::Solver(_) | CliError::Io(_) => 1,
        }
    }
}

impl From<answipt::Error> for CliError {
    fn from(e: answipt::Error) -> Self {
        use answipt::Error as E;
        match e {
            E::InvalidConfig(_)
            | E::Dimension(_)
            | E::NoEavesdropper(_)
            | E::ErIndex { .. }
            | E::UnknownScheme(_) => CliError::Config(e.to_string()),
            E::Infeasible(m) => CliError::Infeasible(m),
            E::Domain(_) | E::Unbounded { .. } => CliError::Solver(e.to_string()),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}
