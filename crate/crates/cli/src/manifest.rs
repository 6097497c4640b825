//! Run manifests: every command records what it ran and what it wrote, so a
//! result directory explains itself and any artifact can be regenerated by
//! replaying the recorded arguments.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    /// Process arguments after the binary name.
    pub argv: Vec<String>,
    pub instance: Option<String>,
    pub seed: Option<u64>,
    /// Effective override values (config file keys, post-parse).
    pub config: BTreeMap<String, String>,
    /// Files the command wrote, relative to the manifest's directory when
    /// they live inside it.
    pub outputs: Vec<String>,
    pub duration_s: f64,
}

impl RunManifest {
    pub fn new(command: &str) -> RunManifest {
        RunManifest {
            command: command.to_string(),
            argv: std::env::args().skip(1).collect(),
            instance: None,
            seed: None,
            config: BTreeMap::new(),
            outputs: Vec::new(),
            duration_s: 0.0,
        }
    }

    pub fn record_output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    /// Write `<command>.manifest.json` into `dir`.
    pub fn finish(mut self, dir: &Path, started: Instant) -> Result<PathBuf> {
        self.duration_s = started.elapsed().as_secs_f64();
        let path = dir.join(format!("{}.manifest.json", self.command));
        let mut body = serde_json::to_string_pretty(&self).context("serialize manifest")?;
        body.push('\n');
        fs::write(&path, body).with_context(|| format!("write {}", path.display()))?;
        Ok(path)
    }
}
