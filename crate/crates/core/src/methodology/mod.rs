//! Five-way methodology labels for abstracts, plus the validation
//! harness (stratified sampling and Cohen's kappa).

mod kappa;
mod model;
mod rules;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use kappa::{cohen_kappa, KappaError, KappaReport};
pub use model::{ModelClassifier, METHODOLOGY_PROMPT};
pub use rules::{FamilyScores, Lexicon, LexiconEntry, RulesClassifier, BUNDLED_LEXICON};

use crate::ingest::MIN_ABSTRACT_CHARS;
use crate::llm::{Mode, StageModelConfig, TransportError};

pub type ClassifierConfig = StageModelConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodologyLabel {
    Quantitative,
    Qualitative,
    MixedMethods,
    Review,
    TheoreticalOther,
}

impl MethodologyLabel {
    pub const ALL: [MethodologyLabel; 5] = [
        Self::Quantitative,
        Self::Qualitative,
        Self::MixedMethods,
        Self::Review,
        Self::TheoreticalOther,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Quantitative => "quantitative",
            Self::Qualitative => "qualitative",
            Self::MixedMethods => "mixed_methods",
            Self::Review => "review",
            Self::TheoreticalOther => "theoretical_other",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for MethodologyLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for MethodologyLabel {
    type Err = String;

    /// Accepts the snake_case names and common spellings such as
    /// "Mixed Methods" or "theoretical/other".
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .trim()
            .to_lowercase()
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect();
        Ok(match key.as_str() {
            "quantitative" | "quant" => Self::Quantitative,
            "qualitative" | "qual" => Self::Qualitative,
            "mixedmethods" | "mixedmethod" | "mixed" => Self::MixedMethods,
            "review" => Self::Review,
            "theoreticalother" | "theoretical" | "other" => Self::TheoreticalOther,
            _ => return Err(format!("unknown methodology label `{s}`")),
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ClassifyError {
    #[error("abstract has {len} characters; at least {MIN_ABSTRACT_CHARS} are required")]
    ShortAbstract { len: usize },
    #[error("classifier configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Endpoint(TransportError),
    #[error("lexicon: {0}")]
    Lexicon(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Classification {
    Labeled(MethodologyLabel),
    /// Model output unusable after one retry.
    Flagged {
        reason: String,
        output: Option<String>,
    },
}

pub trait MethodologyClassifier: Send + Sync {
    fn classify(&self, abstract_text: &str) -> Result<Classification, ClassifyError>;
    fn mode(&self) -> Mode;
    /// Identifies the lexicon or prompt in use, for provenance.
    fn version(&self) -> String;
    fn concurrency(&self) -> usize {
        usize::MAX
    }
}

pub(crate) fn check_abstract(text: &str) -> Result<(), ClassifyError> {
    let len = text.trim().chars().count();
    if len < MIN_ABSTRACT_CHARS {
        return Err(ClassifyError::ShortAbstract { len });
    }
    Ok(())
}

/// Classify one abstract.
pub fn classify_methodology(
    abstract_text: &str,
    classifier: &dyn MethodologyClassifier,
) -> Result<Classification, ClassifyError> {
    classifier.classify(abstract_text)
}

/// One line of `methodology.jsonl`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodologyRecord {
    pub source_id: String,
    pub label: Option<MethodologyLabel>,
    pub mode: Mode,
    pub classifier_version: String,
    /// Set when the model output was unusable; the label, if any, then
    /// came from the rules classifier.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flag: Option<String>,
}

/// Classify a batch of `(source_id, abstract)` pairs in input order.
/// Flagged model outputs fall back to `fallback` when given.
pub fn classify_batch(
    classifier: &dyn MethodologyClassifier,
    fallback: Option<&dyn MethodologyClassifier>,
    items: &[(String, String)],
) -> Result<Vec<MethodologyRecord>, ClassifyError> {
    let run = |(id, text): &(String, String)| -> Result<MethodologyRecord, ClassifyError> {
        let mut record = MethodologyRecord {
            source_id: id.clone(),
            label: None,
            mode: classifier.mode(),
            classifier_version: classifier.version(),
            flag: None,
        };
        match classifier.classify(text)? {
            Classification::Labeled(l) => record.label = Some(l),
            Classification::Flagged { reason, .. } => {
                record.flag = Some(reason);
                if let Some(fb) = fallback {
                    if let Classification::Labeled(l) = fb.classify(text)? {
                        record.label = Some(l);
                        record.mode = fb.mode();
                        record.classifier_version = fb.version();
                    }
                }
            }
        }
        Ok(record)
    };
    let results: Vec<_> = match classifier.concurrency() {
        usize::MAX => {
            use rayon::prelude::*;
            items.par_iter().map(run).collect()
        }
        n => crate::llm::bounded_map(items, n, run),
    };
    results.into_iter().collect()
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum SampleError {
    #[error("category {label} has {available} records; {requested} requested")]
    InsufficientCategory {
        label: MethodologyLabel,
        requested: usize,
        available: usize,
    },
}

/// Stratified sample: `counts[label]` records drawn uniformly without
/// replacement from each category. Returns indices into `labels`, grouped
/// by category in label order and ascending within a category.
pub fn stratified_sample(
    labels: &[MethodologyLabel],
    counts: &BTreeMap<MethodologyLabel, usize>,
    seed: u64,
) -> Result<Vec<usize>, SampleError> {
    use rand::SeedableRng;
    let mut by_label: BTreeMap<MethodologyLabel, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        by_label.entry(*l).or_default().push(i);
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for (&label, &want) in counts {
        let pool = by_label.get(&label).map(Vec::as_slice).unwrap_or(&[]);
        if pool.len() < want {
            return Err(SampleError::InsufficientCategory {
                label,
                requested: want,
                available: pool.len(),
            });
        }
        let mut picked: Vec<usize> = rand::seq::index::sample(&mut rng, pool.len(), want)
            .into_iter()
            .map(|j| pool[j])
            .collect();
        picked.sort_unstable();
        out.extend(picked);
    }
    Ok(out)
}

/// The same count for every category.
pub fn uniform_counts(per_category: usize) -> BTreeMap<MethodologyLabel, usize> {
    MethodologyLabel::ALL
        .iter()
        .map(|&l| (l, per_category))
        .collect()
}

/// Build the classifier selected by `config`.
pub fn build_classifier(
    config: &ClassifierConfig,
    lexicon: Lexicon,
    endpoint_override: Option<String>,
) -> Result<Box<dyn MethodologyClassifier>, ClassifyError> {
    let mut config = config.clone();
    if endpoint_override.is_some() {
        config.endpoint = endpoint_override;
    }
    config.check().map_err(ClassifyError::Config)?;
    match config.mode {
        Mode::Rules => Ok(Box::new(RulesClassifier::new(lexicon))),
        Mode::Model => {
            let template = config
                .prompt_template(METHODOLOGY_PROMPT)
                .map_err(|e| ClassifyError::Config(format!("reading prompt template: {e}")))?;
            let transport = crate::llm::HttpCompletion::new(
                config.endpoint.clone().unwrap_or_default(),
                std::time::Duration::from_secs(config.timeout_secs),
            );
            Ok(Box::new(ModelClassifier::new(
                Box::new(transport),
                template,
                &config,
            )?))
        }
    }
}
