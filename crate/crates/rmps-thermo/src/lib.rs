//! Experiment front end for the random-MPS thermal sampler.
//!
//! This crate carries everything the `no_std` core deliberately leaves out:
//! JSON configuration, CSV/JSON artifact emission, container file IO, the
//! multithreaded sample driver, and the `rmps-thermo` command-line binary.
//!
//! Outputs are reproducible: a run is fully determined by (config, master
//! seed), worker count only changes wall time, and data files are
//! byte-identical across reruns (wall-clock information is segregated into
//! `meta.json`).

pub mod config;
pub mod output;
pub mod parallel;
pub mod run;
pub mod storage;

use std::fmt;

/// Top-level error with the process exit code attached.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad configuration or arguments → exit code 2.
    #[error("config error: {0}")]
    Config(String),
    /// Numerical failure during compute → exit code 3.
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// Filesystem trouble → exit code 3.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) | CliError::Io(_) => 3,
        }
    }
}

/// Core errors surfacing while validating a config are config errors; the
/// same errors during compute are numerical failures.
pub fn config_err(e: impl fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

pub fn numerical_err(e: impl fmt::Display) -> CliError {
    CliError::Numerical(e.to_string())
}

pub type CliResult<T> = Result<T, CliError>;
