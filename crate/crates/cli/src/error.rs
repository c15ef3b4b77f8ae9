//! Failure classes and their process exit codes.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("input data error: {0}")]
    Input(String),
    #[error("output error: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Input(_) => 4,
            CliError::Output(_) => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Attaches a failure class to library results.
pub trait Classify<T> {
    /// Errors from computations driven by the config: numerical failures
    /// stay numerical, everything else is blamed on the config.
    fn run(self) -> CliResult<T>;
    /// Errors while reading user-supplied data files.
    fn input(self) -> CliResult<T>;
    fn output(self) -> CliResult<T>;
}

impl<T> Classify<T> for projens::Result<T> {
    fn run(self) -> CliResult<T> {
        self.map_err(|e| {
            if e.is_numerical() {
                CliError::Numerical(e.to_string())
            } else {
                CliError::Config(e.to_string())
            }
        })
    }

    fn input(self) -> CliResult<T> {
        self.map_err(
            |e| {
                if e.is_numerical() {
                    CliError::Numerical(e.to_string())
                } else {
                    CliError::Input(e.to_string())
                }
            },
        )
    }

    fn output(self) -> CliResult<T> {
        self.map_err(|e| CliError::Output(e.to_string()))
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Output(e.to_string())
    }
}
