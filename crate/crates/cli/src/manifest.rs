//! Run manifests: a small JSON record written alongside every command's
//! outputs capturing what ran, over which files, with which settings.
//! Secret material is never written; the API key field only records
//! whether a key was present.

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct BackendSnapshot {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base_url: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    /// "(redacted)" when a key was configured, "(unset)" otherwise.
    pub api_key: String,
    pub max_in_flight: usize,
    pub max_new_tokens: u32,
    pub temperature: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub backend: Option<BackendSnapshot>,
    pub tool_version: String,
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(command: &str, inputs: Vec<PathBuf>, outputs: &[PathBuf]) -> Self {
        RunManifest {
            command: command.to_string(),
            inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
            outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
            seed: None,
            backend: None,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_backend(mut self, backend: BackendSnapshot) -> Self {
        self.backend = Some(backend);
        self
    }

    pub fn write(&self, path: &Path) -> anyhow::Result<()> {
        let body = serde_json::to_string_pretty(self)?;
        std::fs::write(path, format!("{body}\n"))
            .with_context(|| format!("writing manifest {}", path.display()))?;
        Ok(())
    }
}

/// Staged output files: data is written to `<path>.partial` and renamed
/// into place only when the whole command succeeded. Partials left over
/// from a failed run are removed on drop.
#[derive(Default)]
pub struct StagedOutputs {
    pairs: Vec<(PathBuf, PathBuf)>,
}

impl StagedOutputs {
    pub fn new() -> Self {
        StagedOutputs::default()
    }

    /// Register a final output path; returns the partial path to write.
    pub fn stage(&mut self, final_path: impl Into<PathBuf>) -> PathBuf {
        let final_path = final_path.into();
        let partial = PathBuf::from(format!("{}.partial", final_path.display()));
        self.pairs.push((partial.clone(), final_path));
        partial
    }

    pub fn final_paths(&self) -> Vec<PathBuf> {
        self.pairs.iter().map(|(_, f)| f.clone()).collect()
    }

    /// Move every partial into place.
    pub fn commit(&mut self) -> anyhow::Result<()> {
        for (partial, final_path) in self.pairs.drain(..) {
            std::fs::rename(&partial, &final_path)
                .with_context(|| format!("finalizing {}", final_path.display()))?;
        }
        Ok(())
    }
}

impl Drop for StagedOutputs {
    fn drop(&mut self) {
        for (partial, _) in &self.pairs {
            let _ = std::fs::remove_file(partial);
        }
    }
}

/// Manifest path for a given output base (a file path or a prefix).
pub fn manifest_path(base: &str) -> PathBuf {
    PathBuf::from(format!("{base}.manifest.json"))
}
