use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::config::RunConfig;
use crate::manifest::{sha256_file, ManifestEntry, RunManifest, MANIFEST_NAME};
use crate::{CliError, Result};

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Empty field for an absent value.
pub fn opt_float(x: Option<f64>) -> String {
    x.map(float).unwrap_or_default()
}

/// Single owner of one output directory; records every file it writes.
#[derive(Debug)]
pub struct Emitter {
    dir: PathBuf,
    files: Vec<String>,
    started: Instant,
}

impl Emitter {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            started: Instant::now(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn csv<R>(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = R>) -> Result<()>
    where
        R: IntoIterator<Item = String>,
    {
        let path = self.dir.join(name);
        let io = |e: csv::Error| CliError::Io {
            path: path.clone(),
            source: e.into(),
        };
        let mut w = csv::Writer::from_path(&path).map_err(io)?;
        w.write_record(header).map_err(io)?;
        for row in rows {
            let row: Vec<String> = row.into_iter().collect();
            if row.len() != header.len() {
                return Err(CliError::Manifest(format!(
                    "{name}: row has {} fields, header has {}",
                    row.len(),
                    header.len()
                )));
            }
            w.write_record(&row).map_err(io)?;
        }
        w.flush().map_err(|e| CliError::io(&path, e))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let path = self.dir.join(name);
        let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        let mut w = BufWriter::new(file);
        serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::io(&path, e.into()))?;
        w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| CliError::io(&path, e))?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// Hashes every emitted file and writes `manifest.json` last.
    pub fn finish(self, scenario: &str, config: &RunConfig) -> Result<RunManifest> {
        let files = self
            .files
            .iter()
            .map(|name| {
                let (sha256, bytes) = sha256_file(&self.dir.join(name))?;
                Ok(ManifestEntry {
                    path: name.clone(),
                    sha256,
                    bytes,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let manifest = RunManifest {
            scenario: scenario.to_string(),
            seed: config.sim.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: serde_json::to_value(config).map_err(|e| CliError::Config(e.to_string()))?,
            wall_time_s: self.started.elapsed().as_secs_f64(),
            files,
        };
        let path = self.dir.join(MANIFEST_NAME);
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Config(e.to_string()))?;
        std::fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))?;
        Ok(manifest)
    }
}
