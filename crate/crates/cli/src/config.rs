use std::path::{Path, PathBuf};

use cosflow::SimConfig;
use serde::{Deserialize, Serialize};

use crate::cli::GlobalArgs;
use crate::{CliError, Result};

/// Keys of the flat config file that steer the runner rather than the model.
const RUNNER_KEYS: [&str; 3] = ["record_every", "threads", "out"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub sim: SimConfig,
    pub record_every: usize,
    pub threads: Option<usize>,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            sim: SimConfig::default(),
            record_every: 10,
            threads: None,
            out: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RunnerKeys {
    record_every: Option<usize>,
    threads: Option<usize>,
    out: Option<PathBuf>,
}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

fn read_table(path: &Path) -> Result<toml::Table> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    text.parse::<toml::Table>()
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Parses `key=value`; the value is read as a TOML literal and falls back to a bare string.
fn parse_override(item: &str) -> Result<(String, toml::Value)> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{item}` is not KEY=VALUE")))?;
    let key = key.trim().to_string();
    let value = format!("v = {}", raw.trim())
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.trim().to_string()));
    Ok((key, value))
}

/// Builds a config from a table: runner keys are split off, the rest must be simulation keys.
pub fn from_table(mut table: toml::Table) -> Result<RunConfig> {
    let mut runner = toml::Table::new();
    for key in RUNNER_KEYS {
        if let Some(v) = table.remove(key) {
            runner.insert(key.to_string(), v);
        }
    }
    let keys: RunnerKeys = runner.try_into().map_err(config_err)?;
    let sim: SimConfig = table.try_into().map_err(config_err)?;
    let base = RunConfig::default();
    Ok(RunConfig {
        sim,
        record_every: keys.record_every.unwrap_or(base.record_every),
        threads: keys.threads,
        out: keys.out.unwrap_or(base.out),
    })
}

/// Config file, then `--set` overrides, then the dedicated flags.
pub fn load(args: &GlobalArgs) -> Result<RunConfig> {
    let mut table = match &args.config {
        Some(path) => read_table(path)?,
        None => toml::Table::new(),
    };
    for item in &args.overrides {
        let (k, v) = parse_override(item)?;
        table.insert(k, v);
    }
    let mut config = from_table(table)?;
    if let Some(seed) = args.seed {
        config.sim.seed = seed;
    }
    if let Some(out) = &args.out {
        config.out = out.clone();
    }
    if let Some(n) = args.threads {
        config.threads = Some(n);
    }
    if let Some(n) = args.record_every {
        config.record_every = n;
    }
    if config.record_every == 0 {
        return Err(CliError::Config("record_every must be positive".into()));
    }
    if config.threads == Some(0) {
        return Err(CliError::Config("threads must be positive".into()));
    }
    config.sim.validate()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args() -> GlobalArgs {
        GlobalArgs::default()
    }

    #[test]
    fn defaults_without_file() {
        assert_eq!(load(&args()).unwrap(), RunConfig::default());
    }

    #[test]
    fn flags_win_over_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "seed = 5\nrho = 0.1\nrecord_every = 7\nout = \"a\"\n").unwrap();
        let mut a = args();
        a.config = Some(path);
        a.seed = Some(9);
        a.out = Some("b".into());
        let c = load(&a).unwrap();
        assert_eq!(c.sim.seed, 9);
        assert_eq!(c.sim.rho, 0.1);
        assert_eq!(c.record_every, 7);
        assert_eq!(c.out, PathBuf::from("b"));
    }

    #[test]
    fn overrides_parse_literals_and_enums() {
        let mut a = args();
        a.overrides = vec!["rho=0.25".into(), "loss_kind=l2".into(), "symmetrize_w = false".into()];
        let c = load(&a).unwrap();
        assert_eq!(c.sim.rho, 0.25);
        assert_eq!(c.sim.loss_kind, cosflow::LossKind::L2);
        assert!(!c.sim.symmetrize_w);
    }

    #[test]
    fn unknown_and_invalid_keys_are_config_errors() {
        let mut a = args();
        a.overrides = vec!["rhoo=1".into()];
        assert_eq!(load(&a).unwrap_err().exit_code(), 2);
        a.overrides = vec!["sigma2=-1".into()];
        assert_eq!(load(&a).unwrap_err().exit_code(), 2);
        a.overrides = vec!["record_every=0".into()];
        assert_eq!(load(&a).unwrap_err().exit_code(), 2);
    }
}
