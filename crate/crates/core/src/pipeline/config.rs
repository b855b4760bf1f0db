use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::affiliation::ExtractorConfig;
use crate::analytics::ReportOptions;
use crate::ingest::{check_year, LayoutConfig, FIRST_YEAR, LAST_YEAR};
use crate::llm::Mode;
use crate::methodology::{ClassifierConfig, Lexicon};
use crate::normalize::MappingTables;
use crate::resolve::ScoringPolicy;

/// Optional live fetching of the archive before parsing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FetchConfig {
    pub enabled: bool,
    pub base_url: Option<String>,
    pub delay_ms: u64,
}

impl Default for FetchConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            base_url: None,
            delay_ms: 1000,
        }
    }
}

/// Seeds for every sampling step, so review sheets are reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Seeds {
    pub extraction_sample: u64,
    pub cluster_sample: u64,
    pub methodology_sample: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Self {
            extraction_sample: 17,
            cluster_sample: 23,
            methodology_sample: 31,
        }
    }
}

impl Seeds {
    pub fn all(seed: u64) -> Self {
        Self {
            extraction_sample: seed,
            cluster_sample: seed,
            methodology_sample: seed,
        }
    }
}

/// Sizes of the human-review samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReviewConfig {
    pub extraction_sample: usize,
    pub cluster_largest: usize,
    pub cluster_random: usize,
    /// Abstracts per category in the blinded methodology sheet; capped at
    /// the number available. The default gives a 60-abstract sheet.
    pub methodology_per_category: usize,
}

impl Default for ReviewConfig {
    fn default() -> Self {
        Self {
            extraction_sample: 200,
            cluster_largest: 50,
            cluster_random: 50,
            methodology_per_category: 12,
        }
    }
}

/// Pipeline configuration, read from a TOML file. Relative paths are
/// resolved against the file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub corpus_dir: PathBuf,
    pub dataset_dir: PathBuf,
    pub reports_dir: PathBuf,
    pub figures_dir: PathBuf,
    pub years: Vec<u16>,
    pub fetch: FetchConfig,
    pub layout: LayoutConfig,
    pub extractor: ExtractorConfig,
    pub classifier: ClassifierConfig,
    /// JSON scoring policy; built-in defaults when absent.
    pub scoring_policy: Option<PathBuf>,
    /// Directory of mapping CSVs; bundled tables when absent.
    pub mappings_dir: Option<PathBuf>,
    /// Methodology keyword lexicon CSV; bundled lexicon when absent.
    pub lexicon: Option<PathBuf>,
    pub seeds: Seeds,
    pub review: ReviewConfig,
    pub analytics: ReportOptions,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            corpus_dir: "corpus".into(),
            dataset_dir: "dataset".into(),
            reports_dir: "reports".into(),
            figures_dir: "figures".into(),
            years: (FIRST_YEAR..=LAST_YEAR).collect(),
            fetch: FetchConfig::default(),
            layout: LayoutConfig::default(),
            extractor: ExtractorConfig::default(),
            classifier: ClassifierConfig::default(),
            scoring_policy: None,
            mappings_dir: None,
            lexicon: None,
            seeds: Seeds::default(),
            review: ReviewConfig::default(),
            analytics: ReportOptions::default(),
        }
    }
}

fn config_err(msg: impl Into<String>) -> PipelineError {
    PipelineError::Config(msg.into())
}

/// Parse a year list such as `2005..2026`, `2008,2015` or `2019`.
/// Ranges are inclusive.
pub fn parse_years(spec: &str) -> Result<Vec<u16>, PipelineError> {
    let mut years = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let num = |s: &str| {
            s.trim()
                .parse::<u16>()
                .map_err(|_| config_err(format!("bad year `{s}` in `{spec}`")))
        };
        match part.split_once("..") {
            Some((a, b)) => {
                let (a, b) = (num(a)?, num(b.trim_start_matches('='))?);
                if a > b {
                    return Err(config_err(format!("empty year range `{part}`")));
                }
                years.extend(a..=b);
            }
            None => years.push(num(part)?),
        }
    }
    years.sort_unstable();
    years.dedup();
    Ok(years)
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        toml::from_str(text).map_err(|e| config_err(e.to_string()))
    }

    /// Read a config file and resolve its relative paths.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("reading {}: {e}", path.display())))?;
        let mut config = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.rebase(base);
        Ok(config)
    }

    /// Resolve every relative path against `base`.
    pub fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.corpus_dir);
        fix(&mut self.dataset_dir);
        fix(&mut self.reports_dir);
        fix(&mut self.figures_dir);
        for p in [
            &mut self.scoring_policy,
            &mut self.mappings_dir,
            &mut self.lexicon,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
        for p in [
            &mut self.extractor.prompt_path,
            &mut self.classifier.prompt_path,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
    }

    pub fn set_mode(&mut self, mode: Mode) {
        self.extractor.mode = mode;
        self.classifier.mode = mode;
    }

    /// Check ranges and that every referenced file exists.
    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.years.is_empty() {
            return Err(config_err("no years configured"));
        }
        for &y in &self.years {
            check_year(y).map_err(|e| config_err(e.to_string()))?;
        }
        self.extractor
            .check()
            .map_err(|e| config_err(format!("extractor: {e}")))?;
        self.classifier
            .check()
            .map_err(|e| config_err(format!("classifier: {e}")))?;
        if self.fetch.enabled {
            if self.fetch.base_url.is_none() {
                return Err(config_err(
                    "fetching is enabled but fetch.base_url is not set",
                ));
            }
            if self.fetch.delay_ms == 0 {
                return Err(config_err("fetch.delay_ms must be positive"));
            }
        }
        let paths = [
            ("scoring_policy", &self.scoring_policy),
            ("mappings_dir", &self.mappings_dir),
            ("lexicon", &self.lexicon),
            ("extractor.prompt_path", &self.extractor.prompt_path),
            ("classifier.prompt_path", &self.classifier.prompt_path),
        ];
        for (name, path) in paths {
            if let Some(p) = path {
                if !p.exists() {
                    return Err(config_err(format!(
                        "{name}: {} does not exist",
                        p.display()
                    )));
                }
            }
        }
        if !(0.0..=1.0).contains(&self.analytics.unknown_cutoff) {
            return Err(config_err("analytics.unknown_cutoff must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn mapping_tables(&self) -> Result<MappingTables, PipelineError> {
        match &self.mappings_dir {
            Some(dir) => MappingTables::load(dir).map_err(|e| config_err(e.to_string())),
            None => Ok(MappingTables::default()),
        }
    }

    pub fn scoring(&self) -> Result<ScoringPolicy, PipelineError> {
        match &self.scoring_policy {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| config_err(format!("reading {}: {e}", path.display())))?;
                ScoringPolicy::from_json(&text)
                    .map_err(|e| config_err(format!("{}: {e}", path.display())))
            }
            None => Ok(ScoringPolicy::default()),
        }
    }

    pub fn lexicon(&self) -> Result<Lexicon, PipelineError> {
        match &self.lexicon {
            Some(path) => Lexicon::load(path).map_err(|e| config_err(e.to_string())),
            None => Ok(Lexicon::default()),
        }
    }
}
