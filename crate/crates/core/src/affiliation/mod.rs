//! Author affiliation strings to structured [`ParsedAffiliation`] values.
//!
//! Two interchangeable extractors exist: a deterministic rule-based one
//! that needs nothing but the geography tables, and a model-backed one
//! that prompts a local inference server.

mod model;
mod review;
mod rules;

use serde::{Deserialize, Serialize};

pub use model::{ModelExtractor, AFFILIATION_PROMPT};
pub use review::{
    export_review_sample, sample_indices, score_extraction, validate_extraction,
    ExtractionValidationReport, ReviewError, FIELDS,
};
pub use rules::{is_degree, RulesExtractor};

use crate::llm::{Mode, StageModelConfig, TransportError};

pub type ExtractorConfig = StageModelConfig;

/// Structured view of one author string. Every field is copied from the
/// input; nothing is inferred.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParsedAffiliation {
    pub name: String,
    #[serde(default)]
    pub degrees: Vec<String>,
    #[serde(default)]
    pub position: Option<String>,
    #[serde(default)]
    pub institution: Option<String>,
    #[serde(default)]
    pub department: Option<String>,
    #[serde(default)]
    pub city: Option<String>,
    #[serde(default)]
    pub state: Option<String>,
    #[serde(default)]
    pub country: Option<String>,
}

impl ParsedAffiliation {
    /// Value of a named field for reporting; degrees are joined with "; ".
    pub fn field(&self, name: &str) -> Option<String> {
        match name {
            "name" => Some(self.name.clone()),
            "degrees" => Some(self.degrees.join("; ")),
            "position" => self.position.clone(),
            "institution" => self.institution.clone(),
            "department" => self.department.clone(),
            "city" => self.city.clone(),
            "state" => self.state.clone(),
            "country" => self.country.clone(),
            _ => None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ExtractError {
    #[error("empty affiliation string")]
    EmptyInput,
    #[error("extractor configuration: {0}")]
    Config(String),
    /// Fatal in model mode: nothing can be extracted without the server.
    #[error(transparent)]
    Endpoint(TransportError),
}

/// A record the extractor could not parse; the raw text is preserved for
/// the review queue.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionFlag {
    pub reason: String,
    /// Last model output, when there was one.
    pub output: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Extraction {
    Parsed(ParsedAffiliation),
    Flagged(ExtractionFlag),
}

pub trait AffiliationExtractor: Send + Sync {
    fn extract(&self, raw: &str) -> Result<Extraction, ExtractError>;
    fn mode(&self) -> Mode;
    /// Requests allowed in flight at once.
    fn concurrency(&self) -> usize {
        usize::MAX
    }
}

/// One line of `parsed_affiliations.jsonl`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AffiliationRecord {
    pub source_id: String,
    pub author_index: usize,
    pub year: u16,
    pub raw: String,
    pub affiliation: Option<ParsedAffiliation>,
    pub flag: Option<ExtractionFlag>,
}

/// Input to [`extract_batch`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuthorBlock {
    pub source_id: String,
    pub author_index: usize,
    pub year: u16,
    pub raw: String,
}

/// Extract every block. Results are in input order; the first fatal error
/// aborts the batch. Model-backed extractors are held to their
/// concurrency bound.
pub fn extract_batch(
    extractor: &dyn AffiliationExtractor,
    blocks: &[AuthorBlock],
) -> Result<Vec<AffiliationRecord>, ExtractError> {
    let run = |b: &AuthorBlock| -> Result<AffiliationRecord, ExtractError> {
        let (affiliation, flag) = match extractor.extract(&b.raw) {
            Ok(Extraction::Parsed(p)) => (Some(p), None),
            Ok(Extraction::Flagged(f)) => (None, Some(f)),
            Err(ExtractError::EmptyInput) => (
                None,
                Some(ExtractionFlag {
                    reason: "empty author block".into(),
                    output: None,
                }),
            ),
            Err(e) => return Err(e),
        };
        Ok(AffiliationRecord {
            source_id: b.source_id.clone(),
            author_index: b.author_index,
            year: b.year,
            raw: b.raw.clone(),
            affiliation,
            flag,
        })
    };
    let results: Vec<_> = match extractor.concurrency() {
        usize::MAX => {
            use rayon::prelude::*;
            blocks.par_iter().map(run).collect()
        }
        n => crate::llm::bounded_map(blocks, n, run),
    };
    results.into_iter().collect()
}

/// Build the extractor selected by `config`.
pub fn build_extractor(
    config: &ExtractorConfig,
    geo: crate::normalize::CountryMapping,
    endpoint_override: Option<String>,
) -> Result<Box<dyn AffiliationExtractor>, ExtractError> {
    let mut config = config.clone();
    if endpoint_override.is_some() {
        config.endpoint = endpoint_override;
    }
    config.check().map_err(ExtractError::Config)?;
    match config.mode {
        Mode::Rules => Ok(Box::new(RulesExtractor::new(geo))),
        Mode::Model => {
            let template = config
                .prompt_template(AFFILIATION_PROMPT)
                .map_err(|e| ExtractError::Config(format!("reading prompt template: {e}")))?;
            let endpoint = config.endpoint.clone().unwrap_or_default();
            let transport = crate::llm::HttpCompletion::new(
                endpoint,
                std::time::Duration::from_secs(config.timeout_secs),
            );
            Ok(Box::new(ModelExtractor::new(
                Box::new(transport),
                template,
                &config,
            )?))
        }
    }
}
