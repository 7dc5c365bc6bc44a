//! Scenario files, presets and run orchestration for the `vpl` binary.

pub mod runner;
pub mod scenario;
pub mod sweep;
pub mod verify;

pub use runner::{run_scenario, CheckOutcome, RunArtifacts, RunSummary};
pub use scenario::{parse_config, Scenario, PRESETS};

/// Failures of the command-line layer, each mapped to an exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("numerical abort: {0}")]
    Aborted(String),
}

/// Process exit statuses.
pub mod exit {
    pub const PASS: i32 = 0;
    pub const CHECK_FAILED: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const ABORTED: i32 = 3;
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => exit::USAGE,
            CliError::Io(_) | CliError::Aborted(_) => exit::ABORTED,
        }
    }
}
