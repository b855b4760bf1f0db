//! Record types and file layout of a curated dataset directory.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ingest::RawPresentation;
use crate::methodology::MethodologyRecord;
use crate::normalize::PositionCategory;

pub const RAW_PRESENTATIONS: &str = "raw_presentations.jsonl";
pub const EXCLUDED_PRESENTATIONS: &str = "excluded_presentations.jsonl";
pub const PARSED_AFFILIATIONS: &str = "parsed_affiliations.jsonl";
pub const NORMALIZED_RECORDS: &str = "normalized_records.jsonl";
pub const AUTHOR_RECORDS: &str = "author_records.jsonl";
pub const CLUSTERS: &str = "clusters.jsonl";
pub const METHODOLOGY: &str = "methodology.jsonl";
pub const MANIFEST: &str = "manifest.jsonl";

/// How an author record's fields were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtractionSource {
    /// Parsed by the configured extractor.
    Parsed,
    /// The configured extractor flagged the block; rule-based parsing was
    /// used instead and the block sits in the review queue.
    RulesFallback,
}

/// One author-presentation association with original and normalized
/// values side by side.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthorRecord {
    /// `<source_id>#<author_index>`.
    pub record_key: String,
    pub source_id: String,
    pub year: u16,
    /// Position in the author list; 0 is the first author.
    pub author_index: usize,
    pub raw: String,
    pub name_original: String,
    pub name_normalized: String,
    pub degrees: Vec<String>,
    pub position_raw: Option<String>,
    pub position_category: PositionCategory,
    pub institution_raw: Option<String>,
    /// Canonical name when matched, otherwise the cleaned string.
    pub institution: Option<String>,
    pub institution_matched: bool,
    pub department: Option<String>,
    pub city: Option<String>,
    pub state_raw: Option<String>,
    pub state: Option<String>,
    pub country_raw: Option<String>,
    pub country: Option<String>,
    pub extraction: ExtractionSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster_id: Option<String>,
}

impl AuthorRecord {
    pub fn key_for(source_id: &str, author_index: usize) -> String {
        format!("{source_id}#{author_index}")
    }

    pub fn is_first_author(&self) -> bool {
        self.author_index == 0
    }
}

/// One line of `clusters.jsonl`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterRecord {
    pub cluster_id: String,
    pub canonical_name: String,
    /// Distinct normalized name variants, sorted.
    pub members: Vec<String>,
    /// Author records carrying one of the variants, sorted.
    pub record_keys: Vec<String>,
}

/// The curated dataset held in memory.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dataset {
    pub presentations: Vec<RawPresentation>,
    pub authors: Vec<AuthorRecord>,
    pub clusters: Vec<ClusterRecord>,
    pub methodology: Vec<MethodologyRecord>,
}

fn read_optional<T: serde::de::DeserializeOwned>(path: &Path) -> std::io::Result<Vec<T>> {
    if path.exists() {
        crate::util::read_jsonl(path)
    } else {
        Ok(Vec::new())
    }
}

impl Dataset {
    /// Load whichever dataset files exist in `dir`.
    pub fn load(dir: &Path) -> std::io::Result<Self> {
        Ok(Self {
            presentations: read_optional(&dir.join(RAW_PRESENTATIONS))?,
            authors: read_optional(&dir.join(AUTHOR_RECORDS))?,
            clusters: read_optional(&dir.join(CLUSTERS))?,
            methodology: read_optional(&dir.join(METHODOLOGY))?,
        })
    }
}
