//! Archive snapshots to [`RawPresentation`] records.
//!
//! The flow is fetch once (optional), then parse many times from the local
//! corpus so that every later stage is reproducible offline.

mod corpus;
mod era;
mod fetch;
mod model;
mod parse;

use std::path::PathBuf;

use rayon::prelude::*;

pub use corpus::{Corpus, ManifestEntry, SnapshotKind, MANIFEST_FILE};
pub use era::{
    check_year, Era, EraSelectors, LayoutConfig, ParserEra, FIRST_YEAR, LAST_EARLY_YEAR, LAST_YEAR,
};
pub use fetch::{fetch_program, FetchFailure, FetchReport, DEFAULT_POLITENESS};
pub use model::{
    classify_session_type, source_id, EntryKind, ExcludedPresentation, ExclusionReason,
    FlaggedPage, PageSnapshot, PresentationFormat, RawPresentation,
};
pub use parse::{
    filter_presentations, parse_presentation_page, parse_program_index, MIN_ABSTRACT_CHARS,
};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("unsupported year {0}: archive coverage is {FIRST_YEAR}-{LAST_YEAR}")]
    UnsupportedYear(u16),
    #[error("empty page body for {url}")]
    EmptyBody { url: String },
    #[error("unrecognized index layout for {year}: marker `{marker}` not found")]
    IndexStructure { year: u16, marker: String },
    #[error("invalid selector `{selector}`: {message}")]
    Selector { selector: String, message: String },
    #[error("politeness delay must be positive")]
    InvalidPoliteness,
    #[error("invalid url `{url}`: {message}")]
    Url { url: String, message: String },
    #[error("index page {url} for {year} returned HTTP {status}")]
    IndexStatus { year: u16, url: String, status: u16 },
    #[error("index page {url} for {year} unreachable: {message}")]
    IndexUnreachable {
        year: u16,
        url: String,
        message: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corpus manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error("snapshot {path} does not match its manifest hash")]
    HashMismatch { path: PathBuf },
}

/// Everything produced by parsing a corpus.
#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct IngestOutput {
    pub kept: Vec<RawPresentation>,
    pub excluded: Vec<ExcludedPresentation>,
    pub flagged: Vec<FlaggedPage>,
    /// Presentation pages parsed (kept + excluded + flagged).
    pub pages: usize,
}

/// Parse every presentation page of the requested years in the corpus.
///
/// Pages are parsed in parallel; output order follows the manifest,
/// grouped by ascending year, so it does not depend on scheduling.
pub fn ingest_corpus(
    corpus: &Corpus,
    years: &[u16],
    layouts: &LayoutConfig,
) -> Result<IngestOutput, IngestError> {
    for &year in years {
        check_year(year)?;
    }
    let mut entries: Vec<&ManifestEntry> = corpus
        .entries()
        .iter()
        .filter(|e| e.kind == SnapshotKind::Page && years.contains(&e.year))
        .collect();
    entries.sort_by_key(|e| e.year);

    let parsed = entries
        .par_iter()
        .map(|entry| {
            let snapshot = corpus.read_snapshot(entry)?;
            let era = layouts.era_for(entry.year)?;
            parse_presentation_page(&snapshot, &era)
        })
        .collect::<Result<Vec<_>, IngestError>>()?;

    let mut out = IngestOutput {
        pages: parsed.len(),
        ..Default::default()
    };
    let mut records = Vec::new();
    for page in parsed {
        match page {
            Ok(record) => records.push(record),
            Err(flag) => out.flagged.push(flag),
        }
    }
    let (kept, excluded) = filter_presentations(records);
    out.kept = kept;
    out.excluded = excluded;
    Ok(out)
}
