use crate::report::{versions, Versions};
use himap::{Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::path::{Path, PathBuf};

/// Index of a generated dataset: which files exist and how they were made.
/// File paths are relative to the manifest's own directory. Regression-style
/// datasets carry covariates inline; plain cloud collections use `files`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub kind: String,
    pub seed: u64,
    pub config: Value,
    pub versions: Versions,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub files: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub covariates: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub responses: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub held_out_covariates: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub truth: Vec<String>,
}

impl DatasetManifest {
    pub fn new(kind: &str, seed: u64, config: Value) -> Self {
        Self {
            kind: kind.to_string(),
            seed,
            config,
            versions: versions(),
            files: Vec::new(),
            covariates: Vec::new(),
            responses: Vec::new(),
            held_out_covariates: Vec::new(),
            truth: Vec::new(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let manifest: Self = serde_json::from_str(&text)
            .map_err(|e| Error::Parse(format!("bad manifest {}: {e}", path.display())))?;
        Ok(manifest)
    }

    /// Resolves a manifest-relative file reference.
    pub fn resolve(manifest_path: &Path, rel: &str) -> PathBuf {
        manifest_path
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join(rel)
    }
}
