use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{PipelineError, Stage};

/// Provenance of one completed stage run: what it read, what it wrote.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageManifest {
    pub stage: Stage,
    /// Input name to SHA-256. Data inputs are keyed by their dataset path,
    /// configuration by `config`.
    pub inputs: BTreeMap<String, String>,
    /// Output key to SHA-256.
    pub outputs: BTreeMap<String, String>,
    /// Review sheets written alongside; not hashed because reviewers edit them.
    #[serde(default)]
    pub review_files: Vec<String>,
    pub records_in: u64,
    pub records_out: u64,
    pub timestamp: String,
    pub tool_version: String,
}

/// Every manifest line in file order. A missing file is an empty history.
pub fn read_manifests(path: &Path) -> Result<Vec<StageManifest>, PipelineError> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    crate::util::read_jsonl(path).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// The most recent manifest of each stage.
pub fn latest_manifests(path: &Path) -> Result<BTreeMap<Stage, StageManifest>, PipelineError> {
    Ok(read_manifests(path)?
        .into_iter()
        .map(|m| (m.stage, m))
        .collect())
}

pub fn append_manifest(path: &Path, manifest: &StageManifest) -> Result<(), PipelineError> {
    let io = |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(io)?;
    let mut line = serde_json::to_string(manifest).expect("manifest serializes");
    line.push('\n');
    file.write_all(line.as_bytes()).map_err(io)?;
    file.sync_all().map_err(io)
}
