//! Run manifests: a reproducibility record emitted next to every command's
//! outputs. Rerunning a command with identical inputs and seed produces a
//! byte-identical manifest except for the wall-clock field.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Serialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool_version: &'static str,
    pub command: String,
    pub seed: Option<u64>,
    pub config_digest: Option<String>,
    pub input_digests: BTreeMap<String, String>,
    pub outputs: Vec<String>,
    pub wall_clock_ms: u128,
}

pub struct ManifestBuilder {
    command: String,
    seed: Option<u64>,
    config_digest: Option<String>,
    input_digests: BTreeMap<String, String>,
    outputs: Vec<String>,
    started: Instant,
}

impl ManifestBuilder {
    pub fn new(command: &str) -> Self {
        ManifestBuilder {
            command: command.to_owned(),
            seed: None,
            config_digest: None,
            input_digests: BTreeMap::new(),
            outputs: Vec::new(),
            started: Instant::now(),
        }
    }

    pub fn seed(&mut self, seed: u64) -> &mut Self {
        self.seed = Some(seed);
        self
    }

    pub fn config_bytes(&mut self, bytes: &[u8]) -> &mut Self {
        self.config_digest = Some(digest_bytes(bytes));
        self
    }

    pub fn input(&mut self, path: &Path) -> Result<&mut Self> {
        let bytes = std::fs::read(path)
            .with_context(|| format!("reading input {}", path.display()))?;
        self.input_digests
            .insert(path.display().to_string(), digest_bytes(&bytes));
        Ok(self)
    }

    pub fn output(&mut self, name: &str) -> &mut Self {
        self.outputs.push(name.to_owned());
        self
    }

    /// Writes `manifest.json` into `dir` and returns its path.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let manifest = RunManifest {
            schema_version: 1,
            tool_version: env!("CARGO_PKG_VERSION"),
            command: self.command.clone(),
            seed: self.seed,
            config_digest: self.config_digest.clone(),
            input_digests: self.input_digests.clone(),
            outputs: self.outputs.clone(),
            wall_clock_ms: self.started.elapsed().as_millis(),
        };
        let path = dir.join("manifest.json");
        let mut json = serde_json::to_string_pretty(&manifest)?;
        json.push('\n');
        std::fs::write(&path, json)
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

pub fn digest_bytes(bytes: &[u8]) -> String {
    format!("sha256:{}", hex::encode(Sha256::digest(bytes)))
}
