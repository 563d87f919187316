//! One module per scenario. Each exposes a compute function returning plain data and
//! a `run_*` function that serializes it through an `Emitter`.

pub mod compare;
pub mod concentration;
pub mod eigen_hist;
pub mod equilibria;
pub mod sim;

use std::str::FromStr;

use crate::cli::Command;
use crate::config::RunConfig;
use crate::manifest::RunManifest;
use crate::{CliError, Result};

pub fn dispatch(command: &Command, config: &RunConfig) -> Result<RunManifest> {
    match command {
        Command::PhasePortrait(a) => equilibria::run_phase_portrait(config, a),
        Command::Roots(a) => equilibria::run_roots(config, a),
        Command::RegimeScan(a) => equilibria::run_regime_scan(config, a),
        Command::EigenHist(a) => eigen_hist::run(config, a),
        Command::SimLinear => sim::run(config),
        Command::CompareLosses(a) => compare::run(config, a),
        Command::Concentration(a) => concentration::run(config, a),
    }
}

/// Comma-separated list of numbers.
pub fn parse_list<T: FromStr>(text: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    let items = text
        .split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|e| CliError::Config(format!("`{s}`: {e}"))))
        .collect::<Result<Vec<T>>>()?;
    if items.is_empty() {
        return Err(CliError::Config(format!("empty list `{text}`")));
    }
    Ok(items)
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}
