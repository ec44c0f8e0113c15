//! Command-line front end for the `multiphase` binary.

pub mod commands;
pub mod config;
pub mod recipes;

pub use commands::{cmd_bounds, cmd_reproduce, cmd_simulate, Outputs};
pub use config::{OutputConfig, RunConfig};
pub use recipes::{Figure, Scale};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Compute(#[from] multiphase_core::Error),
}

impl CliError {
    /// 1 for configuration problems, 2 for failures during computation.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Compute(multiphase_core::Error::Config(_)) => 1,
            CliError::Compute(_) => 2,
        }
    }
}
