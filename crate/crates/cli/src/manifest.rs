//! Run manifests: what ran, on which configuration, and what it wrote.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StageTiming {
    pub name: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OutputFile {
    pub path: PathBuf,
    pub bytes: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_path: PathBuf,
    /// SHA-256 of the canonical JSON of the effective configuration.
    pub config_hash: String,
    pub threads: usize,
    /// Seconds since the Unix epoch.
    pub started_at: f64,
    pub finished_at: f64,
    pub stages: Vec<StageTiming>,
    pub outputs: Vec<OutputFile>,
    pub exit_code: i32,
}

fn now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

/// Serializes through `serde_json::Value`, whose maps keep keys sorted, so
/// the text does not depend on field or key order in the source file.
pub fn canonical_json<T: Serialize>(value: &T) -> serde_json::Result<String> {
    serde_json::to_string(&serde_json::to_value(value)?)
}

pub fn config_hash<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let text = canonical_json(value)?;
    Ok(hex::encode(Sha256::digest(text.as_bytes())))
}

/// Collects stage timings while a command runs.
pub struct Recorder {
    manifest: RunManifest,
    stage_start: Option<(String, Instant)>,
}

impl Recorder {
    pub fn new(command: &str, config_path: &Path, config_hash: String) -> Self {
        Self {
            manifest: RunManifest {
                tool: env!("CARGO_PKG_NAME").into(),
                version: env!("CARGO_PKG_VERSION").into(),
                command: command.into(),
                config_path: config_path.to_path_buf(),
                config_hash,
                threads: rayon::current_num_threads(),
                started_at: now(),
                finished_at: 0.0,
                stages: Vec::new(),
                outputs: Vec::new(),
                exit_code: 0,
            },
            stage_start: None,
        }
    }

    pub fn stage(&mut self, name: &str) {
        self.end_stage();
        self.stage_start = Some((name.to_string(), Instant::now()));
    }

    fn end_stage(&mut self) {
        if let Some((name, t)) = self.stage_start.take() {
            self.manifest.stages.push(StageTiming {
                name,
                seconds: t.elapsed().as_secs_f64(),
            });
        }
    }

    pub fn output(&mut self, path: &Path) {
        let bytes = std::fs::metadata(path).map(|m| m.len()).unwrap_or(0);
        self.manifest.outputs.push(OutputFile {
            path: path.to_path_buf(),
            bytes,
        });
    }

    pub fn finish(mut self, exit_code: i32) -> RunManifest {
        self.end_stage();
        self.manifest.finished_at = now();
        self.manifest.exit_code = exit_code;
        self.manifest
    }
}
