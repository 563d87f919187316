//! Scenario runner for the linear cosine-loss dynamics: each subcommand writes CSV/JSON
//! data plus a hashed `manifest.json` into the output directory.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod commands;
pub mod config;
pub mod manifest;
pub mod output;

use std::path::PathBuf;

use thiserror::Error;

pub use cli::{Cli, Command};
pub use config::RunConfig;
pub use manifest::RunManifest;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical failure at epoch {epoch}: {source}")]
    NumericalAt { epoch: usize, source: cosflow::Error },

    #[error("numerical failure: {0}")]
    Numerical(cosflow::Error),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("manifest check failed: {0}")]
    Manifest(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::NumericalAt { .. } | CliError::Numerical(_) => 3,
            CliError::Io { .. } | CliError::Manifest(_) => 1,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

impl From<cosflow::Error> for CliError {
    fn from(e: cosflow::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e)
        } else {
            CliError::Config(e.to_string())
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

/// Resolves the configuration, sizes the thread pool and dispatches the subcommand.
pub fn run(cli: Cli) -> Result<RunManifest> {
    let config = config::load(&cli.global)?;
    if let Some(n) = config.threads {
        // A pool may already exist when `run` is called twice in one process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    commands::dispatch(&cli.command, &config)
}
