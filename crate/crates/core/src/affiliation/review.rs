use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AffiliationExtractor, AffiliationRecord, ExtractError, Extraction, ParsedAffiliation};

/// Schema fields in declaration order.
pub const FIELDS: [&str; 8] = [
    "name",
    "degrees",
    "position",
    "institution",
    "department",
    "city",
    "state",
    "country",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionValidationReport {
    pub sample_size: usize,
    /// Share of exact matches after trimming, per field with gold values.
    pub per_field_accuracy: BTreeMap<String, f64>,
    /// Records with a gold value, per field (the accuracy denominator).
    pub per_field_support: BTreeMap<String, usize>,
    /// Records the extractor flagged instead of parsing.
    pub flagged: usize,
}

fn gold_value(gold: &ParsedAffiliation, field: &str) -> Option<String> {
    let v = gold.field(field)?;
    let v = v.trim();
    (!v.is_empty()).then(|| v.to_string())
}

fn same(field: &str, gold: &ParsedAffiliation, got: &ParsedAffiliation) -> bool {
    if field == "degrees" {
        let trim = |v: &[String]| v.iter().map(|d| d.trim().to_string()).collect::<Vec<_>>();
        return trim(&gold.degrees) == trim(&got.degrees);
    }
    gold.field(field).map(|v| v.trim().to_string())
        == got.field(field).map(|v| v.trim().to_string())
}

/// Score extractor output against gold labels. A `None` prediction (a
/// flagged record) counts as wrong on every field with a gold value.
pub fn score_extraction(
    pairs: &[(ParsedAffiliation, Option<ParsedAffiliation>)],
) -> ExtractionValidationReport {
    let mut correct: BTreeMap<String, usize> = BTreeMap::new();
    let mut support: BTreeMap<String, usize> = BTreeMap::new();
    for (gold, got) in pairs {
        for field in FIELDS {
            if gold_value(gold, field).is_none() {
                continue;
            }
            *support.entry(field.to_string()).or_default() += 1;
            if got.as_ref().is_some_and(|g| same(field, gold, g)) {
                *correct.entry(field.to_string()).or_default() += 1;
            }
        }
    }
    let per_field_accuracy = support
        .iter()
        .map(|(f, &n)| {
            let c = correct.get(f).copied().unwrap_or(0);
            (f.clone(), c as f64 / n as f64)
        })
        .collect();
    ExtractionValidationReport {
        sample_size: pairs.len(),
        per_field_accuracy,
        per_field_support: support,
        flagged: pairs.iter().filter(|(_, g)| g.is_none()).count(),
    }
}

/// Run `extractor` over a gold sample of `(raw, gold)` pairs and score it.
pub fn validate_extraction(
    sample: &[(String, ParsedAffiliation)],
    extractor: &dyn AffiliationExtractor,
) -> Result<ExtractionValidationReport, ExtractError> {
    if sample.is_empty() {
        return Err(ExtractError::Config("validation sample is empty".into()));
    }
    let mut pairs = Vec::with_capacity(sample.len());
    for (raw, gold) in sample {
        let got = match extractor.extract(raw)? {
            Extraction::Parsed(p) => Some(p),
            Extraction::Flagged(_) => None,
        };
        pairs.push((gold.clone(), got));
    }
    Ok(score_extraction(&pairs))
}

#[derive(Debug, thiserror::Error)]
pub enum ReviewError {
    #[error("cannot sample {requested} records from a population of {population}")]
    SampleTooLarge { requested: usize, population: usize },
    #[error("writing {path}: {message}")]
    Write { path: String, message: String },
}

/// Indices of a uniform sample without replacement, sorted ascending.
pub fn sample_indices(population: usize, n: usize, seed: u64) -> Result<Vec<usize>, ReviewError> {
    use rand::SeedableRng;
    if n > population {
        return Err(ReviewError::SampleTooLarge {
            requested: n,
            population,
        });
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut idx = rand::seq::index::sample(&mut rng, population, n).into_vec();
    idx.sort_unstable();
    Ok(idx)
}

/// Write a uniformly sampled review sheet: raw text beside every
/// extracted field. Deterministic for a given seed.
pub fn export_review_sample(
    records: &[AffiliationRecord],
    n: usize,
    seed: u64,
    path: &Path,
) -> Result<usize, ReviewError> {
    let idx = sample_indices(records.len(), n, seed)?;
    let err = |e: &dyn std::fmt::Display| ReviewError::Write {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_path(path).map_err(|e| err(&e))?;
    let mut header = vec!["source_id", "author_index", "raw", "flag"];
    header.extend(FIELDS);
    w.write_record(&header).map_err(|e| err(&e))?;
    for &i in &idx {
        let r = &records[i];
        let mut row = vec![
            r.source_id.clone(),
            r.author_index.to_string(),
            r.raw.clone(),
            r.flag
                .as_ref()
                .map(|f| f.reason.clone())
                .unwrap_or_default(),
        ];
        for field in FIELDS {
            row.push(
                r.affiliation
                    .as_ref()
                    .and_then(|a| a.field(field))
                    .unwrap_or_default(),
            );
        }
        w.write_record(&row).map_err(|e| err(&e))?;
    }
    w.flush().map_err(|e| err(&e))?;
    Ok(idx.len())
}
