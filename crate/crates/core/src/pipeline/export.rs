use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{io_err, PipelineError};
use crate::dataset::Dataset;
use crate::ingest::PresentationFormat;
use crate::methodology::MethodologyLabel;
use crate::normalize::PositionCategory;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Jsonl,
}

impl std::str::FromStr for ExportFormat {
    type Err = PipelineError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Self::Csv),
            "jsonl" => Ok(Self::Jsonl),
            other => Err(PipelineError::Config(format!(
                "unknown export format `{other}`"
            ))),
        }
    }
}

/// One author-presentation row with presentation and identity fields
/// joined in, for downstream tools that want a single flat file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportRow {
    pub record_key: String,
    pub source_id: String,
    pub year: u16,
    pub title: String,
    pub format: PresentationFormat,
    pub session_title: Option<String>,
    pub methodology: Option<MethodologyLabel>,
    pub author_index: usize,
    pub first_author: bool,
    pub name: String,
    pub name_normalized: String,
    pub cluster_id: Option<String>,
    pub canonical_name: Option<String>,
    pub position_raw: Option<String>,
    pub position_category: PositionCategory,
    pub institution: Option<String>,
    pub institution_matched: bool,
    pub department: Option<String>,
    pub city: Option<String>,
    pub state: Option<String>,
    pub country: Option<String>,
}

/// Write the joined dataset to `out`; returns the number of rows.
/// Author records whose presentation is missing are skipped.
pub fn export_dataset(
    dir: &Path,
    format: ExportFormat,
    out: &Path,
) -> Result<usize, PipelineError> {
    let ds = Dataset::load(dir).map_err(io_err(dir))?;
    let presentations: HashMap<&str, _> = ds
        .presentations
        .iter()
        .map(|p| (p.source_id.as_str(), p))
        .collect();
    let labels: HashMap<&str, Option<MethodologyLabel>> = ds
        .methodology
        .iter()
        .map(|m| (m.source_id.as_str(), m.label))
        .collect();
    let canonical: HashMap<&str, &str> = ds
        .clusters
        .iter()
        .map(|c| (c.cluster_id.as_str(), c.canonical_name.as_str()))
        .collect();

    let rows: Vec<ExportRow> = ds
        .authors
        .iter()
        .filter_map(|a| {
            let p = presentations.get(a.source_id.as_str())?;
            Some(ExportRow {
                record_key: a.record_key.clone(),
                source_id: a.source_id.clone(),
                year: a.year,
                title: p.title.clone(),
                format: p.format,
                session_title: p.session_title.clone(),
                methodology: labels.get(a.source_id.as_str()).copied().flatten(),
                author_index: a.author_index,
                first_author: a.is_first_author(),
                name: a.name_original.clone(),
                name_normalized: a.name_normalized.clone(),
                cluster_id: a.cluster_id.clone(),
                canonical_name: a
                    .cluster_id
                    .as_deref()
                    .and_then(|id| canonical.get(id))
                    .map(|s| s.to_string()),
                position_raw: a.position_raw.clone(),
                position_category: a.position_category,
                institution: a.institution.clone(),
                institution_matched: a.institution_matched,
                department: a.department.clone(),
                city: a.city.clone(),
                state: a.state.clone(),
                country: a.country.clone(),
            })
        })
        .collect();

    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    match format {
        ExportFormat::Jsonl => {
            crate::util::write_jsonl(out, &rows).map_err(io_err(out))?;
        }
        ExportFormat::Csv => {
            let csv_err = |e: csv::Error| PipelineError::Io {
                path: out.to_path_buf(),
                source: e.into(),
            };
            let mut w = csv::Writer::from_path(out).map_err(csv_err)?;
            for row in &rows {
                w.serialize(row).map_err(csv_err)?;
            }
            w.flush().map_err(io_err(out))?;
        }
    }
    Ok(rows.len())
}
