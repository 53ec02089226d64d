//! Run manifest written next to every output.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use crate::config::Config;

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    pub threads: Option<usize>,
    /// Fully resolved configuration, defaults included.
    pub config: Config,
    pub outputs: Vec<String>,
    pub timings_s: BTreeMap<String, f64>,
    /// Command-specific results (estimates, failure rates, ...).
    pub details: serde_json::Value,
}

impl RunManifest {
    pub fn new(command: impl Into<String>, config: &Config, threads: Option<usize>) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.into(),
            seed: config.seed,
            threads,
            config: config.clone(),
            outputs: Vec::new(),
            timings_s: BTreeMap::new(),
            details: serde_json::Value::Null,
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n")
            .with_context(|| format!("cannot write {}", path.display()))
    }
}
