//! File-driven front end: `design`, `simulate` and `verify`.

pub mod config;
pub mod manifest;
pub mod verify;

mod commands;

pub use commands::{cmd_design, cmd_simulate, cmd_verify, ber_csv, DesignReport, SimulateOutcome};
pub use manifest::{Command, EmittedFile, RunManifest};
pub use verify::{run_verify, SuiteResult, VerifyReport};

/// Environment variable supplying the output directory when `--out` is absent.
pub const OUT_DIR_ENV: &str = "MIMO_SIC_OUT";

pub const EXIT_OK: u8 = 0;
pub const EXIT_IO: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_SOLVER: u8 = 3;
pub const EXIT_VERIFY: u8 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error in {path}: {message}")]
    Config { path: String, message: String },
    #[error("solver error: {0}")]
    Solver(#[from] crate::Error),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } => EXIT_CONFIG,
            CliError::Solver(_) => EXIT_SOLVER,
            CliError::Verification(_) => EXIT_VERIFY,
            CliError::Io { .. } => EXIT_IO,
        }
    }
}
