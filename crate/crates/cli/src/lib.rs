//! Command-line driver for covert distributed hypothesis testing: JSON
//! experiment configs, CSV/JSON result files and a parallel Monte-Carlo
//! driver on top of `covert-dht-core`.

pub mod commands;
pub mod config;
pub mod output;
pub mod parallel;

use covert_dht_core::Error as CoreError;

use config::ConfigError;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    /// Validation or channel-condition failure (or a failed check).
    pub const VALIDATION: i32 = 1;
    /// Unreadable or malformed input.
    pub const PARSE: i32 = 2;
    /// Numerical failure such as non-convergence.
    pub const NUMERICAL: i32 = 3;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numerical(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Io(_) => exit::PARSE,
            CliError::Validation(_) => exit::VALIDATION,
            CliError::Numerical(_) => exit::NUMERICAL,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::NoConvergence { .. } | CoreError::Infeasible | CoreError::EmptyFeasibleSet => {
                CliError::Numerical(e.to_string())
            }
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Parse(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Parse(e.to_string())
    }
}
