//! Stage orchestration over a dataset directory of JSON-Lines files.
//!
//! Each stage reads its inputs, writes outputs into a staging directory,
//! moves them into place and appends a [`StageManifest`]. Manifests form a
//! hash chain: a stage refuses to run on upstream outputs that changed
//! since they were produced, and a rerun with unchanged inputs is a no-op.

mod config;
mod export;
mod manifest;
mod stages;
mod validate;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::affiliation::{ExtractError, ReviewError};
use crate::analytics::AnalyticsError;
use crate::dataset;
use crate::ingest::IngestError;
use crate::methodology::ClassifyError;
use crate::util::sha256_file;

pub use config::{parse_years, FetchConfig, PipelineConfig, ReviewConfig, Seeds};
pub use export::{export_dataset, ExportFormat, ExportRow};
pub use manifest::{latest_manifests, read_manifests, StageManifest};
pub use stages::{
    cluster_authors, kappa_from_review, normalize_record, METHODOLOGY_REVIEW_COLUMNS,
};
pub use validate::{validate_dataset, ValidationReport, Violation, ViolationKind};

pub const LOCK_FILE: &str = ".confcurate.lock";
pub const REVIEW_DIR: &str = "review";
/// Input key under which the corpus manifest is hashed.
const CORPUS_KEY: &str = "corpus/manifest.jsonl";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Ingest,
    Extract,
    Normalize,
    Resolve,
    Classify,
    Analyze,
}

impl Stage {
    /// Execution order of a full run.
    pub const ALL: [Stage; 6] = [
        Self::Ingest,
        Self::Extract,
        Self::Normalize,
        Self::Resolve,
        Self::Classify,
        Self::Analyze,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Ingest => "ingest",
            Self::Extract => "extract",
            Self::Normalize => "normalize",
            Self::Resolve => "resolve",
            Self::Classify => "classify",
            Self::Analyze => "analyze",
        }
    }

    pub fn prerequisites(self) -> &'static [Stage] {
        match self {
            Self::Ingest => &[],
            Self::Extract => &[Self::Ingest],
            Self::Normalize => &[Self::Extract],
            Self::Resolve => &[Self::Normalize],
            Self::Classify => &[Self::Ingest],
            Self::Analyze => &[Self::Resolve, Self::Classify],
        }
    }

    /// Every stage upstream of this one, in execution order.
    pub fn ancestors(self) -> Vec<Stage> {
        let mut seen = std::collections::BTreeSet::new();
        let mut stack: Vec<Stage> = self.prerequisites().to_vec();
        while let Some(s) = stack.pop() {
            if seen.insert(s) {
                stack.extend_from_slice(s.prerequisites());
            }
        }
        Stage::ALL
            .into_iter()
            .filter(|s| seen.contains(s))
            .collect()
    }

    /// Dataset files the stage reads.
    fn data_inputs(self) -> &'static [&'static str] {
        match self {
            Self::Ingest => &[],
            Self::Extract | Self::Classify => &[dataset::RAW_PRESENTATIONS],
            Self::Normalize => &[dataset::PARSED_AFFILIATIONS],
            Self::Resolve => &[dataset::NORMALIZED_RECORDS],
            Self::Analyze => &[
                dataset::RAW_PRESENTATIONS,
                dataset::AUTHOR_RECORDS,
                dataset::CLUSTERS,
                dataset::METHODOLOGY,
            ],
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Stage {
    type Err = PipelineError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| PipelineError::Config(format!("unknown stage `{s}`")))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("stage `{stage}` requires `{missing}` to have completed first")]
    Prerequisite { stage: Stage, missing: Stage },
    #[error("output of stage `{stage}` is stale: {input} changed since it ran; rerun `{stage}` or pass --force")]
    Stale { stage: Stage, input: String },
    #[error("dataset is locked by another run ({}); delete the file if no run is active", .0.display())]
    Locked(PathBuf),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
    #[error(transparent)]
    Review(#[from] ReviewError),
    #[error("invalid data: {0}")]
    Data(String),
    #[error("{0} violation(s) found")]
    Violations(usize),
}

impl PipelineError {
    /// Process exit status: 1 validation failure, 2 configuration or
    /// usage error, 3 upstream I/O failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Prerequisite { .. } | Self::Locked(_) => 2,
            Self::Stale { .. } | Self::Data(_) | Self::Violations(_) => 1,
            Self::Io { .. } => 3,
            Self::Ingest(e) => match e {
                IngestError::UnsupportedYear(_)
                | IngestError::InvalidPoliteness
                | IngestError::Selector { .. }
                | IngestError::Url { .. } => 2,
                _ => 3,
            },
            Self::Extract(ExtractError::Config(_)) | Self::Classify(ClassifyError::Config(_)) => 2,
            Self::Classify(ClassifyError::Lexicon(_)) => 2,
            Self::Extract(ExtractError::Endpoint(_))
            | Self::Classify(ClassifyError::Endpoint(_)) => 3,
            Self::Extract(_) | Self::Classify(_) => 1,
            Self::Analytics(AnalyticsError::Write { .. })
            | Self::Review(ReviewError::Write { .. }) => 3,
            Self::Analytics(_) | Self::Review(_) => 1,
        }
    }
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Per-invocation switches that are not part of the config file.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Run even when upstream outputs are stale or the stage is current.
    pub force: bool,
    /// Inference endpoint that overrides both stage configs.
    pub endpoint_override: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Ran(StageManifest),
    /// Inputs and outputs unchanged since the last run; nothing was done.
    UpToDate(StageManifest),
}

impl Outcome {
    pub fn manifest(&self) -> &StageManifest {
        match self {
            Self::Ran(m) | Self::UpToDate(m) => m,
        }
    }
}

/// Exclusive claim on a dataset directory, released on drop.
struct DatasetLock(PathBuf);

impl DatasetLock {
    fn acquire(dir: &Path) -> Result<Self, PipelineError> {
        let path = dir.join(LOCK_FILE);
        match std::fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
        {
            Ok(mut f) => {
                use std::io::Write;
                let _ = writeln!(f, "{}", std::process::id());
                Ok(Self(path))
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(PipelineError::Locked(path))
            }
            Err(e) => Err(io_err(&path)(e)),
        }
    }
}

impl Drop for DatasetLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.0);
    }
}

/// Files a stage has written into its staging directory.
pub(crate) struct Staging {
    dir: tempfile::TempDir,
    outputs: Vec<String>,
    reviews: Vec<String>,
}

impl Staging {
    fn new(dataset_dir: &Path) -> Result<Self, PipelineError> {
        let dir = tempfile::Builder::new()
            .prefix(".staging-")
            .tempdir_in(dataset_dir)
            .map_err(io_err(dataset_dir))?;
        Ok(Self {
            dir,
            outputs: Vec::new(),
            reviews: Vec::new(),
        })
    }

    fn slot(&self, key: &str) -> Result<PathBuf, PipelineError> {
        let path = self.dir.path().join(key);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
        Ok(path)
    }

    /// Path for a hashed stage output.
    pub(crate) fn output(&mut self, key: &str) -> Result<PathBuf, PipelineError> {
        self.outputs.push(key.to_string());
        self.slot(key)
    }

    /// Path for a review sheet.
    pub(crate) fn review(&mut self, name: &str) -> Result<PathBuf, PipelineError> {
        let key = format!("{REVIEW_DIR}/{name}");
        self.reviews.push(key.clone());
        self.slot(&key)
    }
}

/// Counts reported by a stage body.
pub(crate) struct StageCounts {
    pub records_in: u64,
    pub records_out: u64,
}

pub struct Pipeline {
    config: PipelineConfig,
    options: RunOptions,
}

impl Pipeline {
    pub fn new(config: PipelineConfig, options: RunOptions) -> Result<Self, PipelineError> {
        config.validate()?;
        Ok(Self { config, options })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.config.dataset_dir.join(dataset::MANIFEST)
    }

    /// Where an output or input key lives on disk.
    pub fn path_for_key(&self, key: &str) -> PathBuf {
        if let Some(rest) = key.strip_prefix("reports/") {
            self.config.reports_dir.join(rest)
        } else if let Some(rest) = key.strip_prefix("figures/") {
            self.config.figures_dir.join(rest)
        } else if key == CORPUS_KEY {
            self.config.corpus_dir.join(crate::ingest::MANIFEST_FILE)
        } else {
            self.config.dataset_dir.join(key)
        }
    }

    fn hash_key(&self, key: &str) -> Result<Option<String>, PipelineError> {
        let path = self.path_for_key(key);
        if !path.exists() {
            return Ok(None);
        }
        sha256_file(&path).map(Some).map_err(io_err(&path))
    }

    /// Current input hashes of `stage`; missing files hash as `missing`.
    fn current_inputs(&self, stage: Stage) -> Result<BTreeMap<String, String>, PipelineError> {
        let mut inputs = BTreeMap::new();
        inputs.insert(
            "config".to_string(),
            stages::config_digest(&self.config, stage)?,
        );
        let keys: Vec<&str> = match stage {
            Stage::Ingest => vec![CORPUS_KEY],
            s => s.data_inputs().to_vec(),
        };
        for key in keys {
            let hash = self.hash_key(key)?.unwrap_or_else(|| "missing".to_string());
            inputs.insert(key.to_string(), hash);
        }
        Ok(inputs)
    }

    /// First recorded output that no longer matches the file on disk.
    fn changed_output(&self, m: &StageManifest) -> Result<Option<String>, PipelineError> {
        for (key, hash) in &m.outputs {
            if self.hash_key(key)?.as_deref() != Some(hash.as_str()) {
                return Ok(Some(key.clone()));
            }
        }
        Ok(None)
    }

    fn changed_input(&self, m: &StageManifest) -> Result<Option<String>, PipelineError> {
        let current = self.current_inputs(m.stage)?;
        Ok(current
            .iter()
            .find(|(k, v)| m.inputs.get(*k) != Some(*v))
            .map(|(k, _)| k.clone())
            .or_else(|| m.inputs.keys().find(|k| !current.contains_key(*k)).cloned()))
    }

    /// Run one stage, holding the dataset lock.
    pub fn run(&self, stage: Stage) -> Result<Outcome, PipelineError> {
        let dir = &self.config.dataset_dir;
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        let _lock = DatasetLock::acquire(dir)?;
        self.run_locked(stage)
    }

    /// Run every stage in order.
    pub fn run_all(&self) -> Result<Vec<(Stage, Outcome)>, PipelineError> {
        let dir = &self.config.dataset_dir;
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        let _lock = DatasetLock::acquire(dir)?;
        Stage::ALL
            .into_iter()
            .map(|s| self.run_locked(s).map(|o| (s, o)))
            .collect()
    }

    fn run_locked(&self, stage: Stage) -> Result<Outcome, PipelineError> {
        let history = latest_manifests(&self.manifest_path())?;
        for ancestor in stage.ancestors() {
            let m = history.get(&ancestor).ok_or(PipelineError::Prerequisite {
                stage,
                missing: ancestor,
            })?;
            if self.options.force {
                continue;
            }
            if let Some(input) = self.changed_input(m)? {
                return Err(PipelineError::Stale {
                    stage: ancestor,
                    input,
                });
            }
            if let Some(output) = self.changed_output(m)? {
                return Err(PipelineError::Stale {
                    stage: ancestor,
                    input: output,
                });
            }
        }

        if stage == Stage::Ingest && self.config.fetch.enabled {
            stages::fetch(&self.config)?;
        }
        let inputs = self.current_inputs(stage)?;
        if let Some(m) = history.get(&stage) {
            if !self.options.force && m.inputs == inputs && self.changed_output(m)?.is_none() {
                return Ok(Outcome::UpToDate(m.clone()));
            }
        }

        let mut staging = Staging::new(&self.config.dataset_dir)?;
        let counts = stages::execute(stage, &self.config, &self.options, &mut staging)?;
        let mut outputs = BTreeMap::new();
        for key in staging.outputs.iter().chain(&staging.reviews) {
            let from = staging.dir.path().join(key);
            let to = self.path_for_key(key);
            commit_file(&from, &to)?;
            if staging.outputs.contains(key) {
                outputs.insert(key.clone(), sha256_file(&to).map_err(io_err(&to))?);
            }
        }
        let manifest = StageManifest {
            stage,
            inputs,
            outputs,
            review_files: staging.reviews.clone(),
            records_in: counts.records_in,
            records_out: counts.records_out,
            timestamp: chrono::Utc::now().to_rfc3339(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        };
        manifest::append_manifest(&self.manifest_path(), &manifest)?;
        Ok(Outcome::Ran(manifest))
    }
}

/// Move a staged file into place with an atomic rename, copying through a
/// temporary file in the target directory when the rename crosses devices.
fn commit_file(from: &Path, to: &Path) -> Result<(), PipelineError> {
    let parent = to.parent().unwrap_or(Path::new("."));
    std::fs::create_dir_all(parent).map_err(io_err(parent))?;
    if std::fs::rename(from, to).is_ok() {
        return Ok(());
    }
    let tmp = tempfile::NamedTempFile::new_in(parent).map_err(io_err(parent))?;
    std::fs::copy(from, tmp.path()).map_err(io_err(from))?;
    tmp.persist(to).map_err(|e| io_err(to)(e.error))?;
    Ok(())
}
