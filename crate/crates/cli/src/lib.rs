//! Front end for the `revpot` binary: configuration, subcommands and CSV.

pub mod commands;
pub mod config;
pub mod output;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("no reversal charge: {0}")]
    Existence(String),
    #[error("oracle tolerance exceeded: {0}")]
    Oracle(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 0 success, 1 oracle tolerance, 2 configuration or i/o, 3 solver, 4 no reversal charge.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Oracle(_) => 1,
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Existence(_) => 4,
        }
    }
}

impl From<revpot::Error> for CliError {
    fn from(e: revpot::Error) -> Self {
        use revpot::Error as E;
        match e {
            E::InvalidProfile(_)
            | E::Domain { .. }
            | E::Configuration(_)
            | E::DegenerateProfile(_) => CliError::Config(e.to_string()),
            E::NoReversalCharge { .. } | E::DegenerateBaths(_) => {
                CliError::Existence(e.to_string())
            }
            _ => CliError::Solver(e.to_string()),
        }
    }
}
