//! Run manifests and output writers.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::Result;
use crate::harness::Table;

/// Provenance of one CLI run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    /// SHA-256 over the command name and the canonical configuration.
    pub digest: String,
    pub seed: u64,
    pub started: String,
    pub finished: Option<String>,
    pub outputs: Vec<PathBuf>,
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

/// Hex SHA-256 of `command`, a newline and the canonical TOML of `config`.
pub fn config_digest(command: &str, config: &RunConfig) -> String {
    let mut h = Sha256::new();
    h.update(command.as_bytes());
    h.update(b"\n");
    h.update(config.to_canonical_toml().as_bytes());
    hex::encode(h.finalize())
}

impl RunManifest {
    pub fn start(command: &str, config: &RunConfig) -> Self {
        Self {
            command: command.to_string(),
            digest: config_digest(command, config),
            seed: config.experiment.seed,
            started: now(),
            finished: None,
            outputs: Vec::new(),
        }
    }

    /// Line embedded at the top of every CSV output.
    pub fn preamble(&self) -> Vec<String> {
        vec![format!("manifest_digest={}", self.digest)]
    }

    /// Writes `table` as `<dir>/<stem>.csv` and records the path.
    pub fn write_table(&mut self, dir: &Path, stem: &str, table: &Table) -> Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let path = dir.join(format!("{stem}.csv"));
        let mut buf = Vec::new();
        table.write_csv(&mut buf, &self.preamble())?;
        fs::write(&path, buf)?;
        self.outputs.push(path.clone());
        Ok(path)
    }

    /// Writes the JSON summary `{manifest, config, report}` as
    /// `<dir>/<stem>.json`; the summary lists itself among the outputs.
    pub fn finish<T: Serialize>(mut self, dir: &Path, stem: &str, config: &RunConfig, report: &T) -> Result<Self> {
        #[derive(Serialize)]
        struct Summary<'a, T> {
            manifest: &'a RunManifest,
            config: &'a RunConfig,
            report: &'a T,
        }
        fs::create_dir_all(dir)?;
        let path = dir.join(format!("{stem}.json"));
        self.outputs.push(path.clone());
        self.finished = Some(now());
        let text = serde_json::to_string_pretty(&Summary {
            manifest: &self,
            config,
            report,
        })
        .map_err(|e| crate::error::Error::numeric(format!("cannot encode summary: {e}")))?;
        fs::write(&path, text + "\n")?;
        Ok(self)
    }
}
