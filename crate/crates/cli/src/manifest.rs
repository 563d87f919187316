use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{CliError, Result};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Path relative to the output directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub scenario: String,
    pub seed: u64,
    pub version: String,
    pub config: serde_json::Value,
    pub wall_time_s: f64,
    pub files: Vec<ManifestEntry>,
}

pub fn sha256_file(path: &Path) -> Result<(String, u64)> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok((hex::encode(Sha256::digest(&bytes)), bytes.len() as u64))
}

impl RunManifest {
    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_NAME);
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Manifest(format!("{}: {e}", path.display())))
    }

    /// Every listed file must exist with the recorded hash.
    pub fn verify(&self, dir: &Path) -> Result<()> {
        for entry in &self.files {
            let path = dir.join(&entry.path);
            if !path.is_file() {
                return Err(CliError::Manifest(format!("{} is missing", entry.path)));
            }
            let (hash, _) = sha256_file(&path)?;
            if hash != entry.sha256 {
                return Err(CliError::Manifest(format!("{} does not match its hash", entry.path)));
            }
        }
        Ok(())
    }
}

/// Reads `dir/manifest.json` and checks every file it lists.
pub fn verify_dir(dir: &Path) -> Result<RunManifest> {
    let manifest = RunManifest::read(dir)?;
    manifest.verify(dir)?;
    Ok(manifest)
}
