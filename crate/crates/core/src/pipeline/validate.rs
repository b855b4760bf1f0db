use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{io_err, PipelineError};
use crate::dataset::{self, AuthorRecord, Dataset};
use crate::normalize::{classify_position, normalize_name};
use crate::resolve::cluster_id_for;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    DuplicateRecordKey,
    /// Author record whose presentation does not exist.
    OrphanRecord,
    /// Author record without a cluster, or pointing at an unknown one.
    MissingCluster,
    /// Cluster record keys and author cluster ids disagree.
    ClusterMembership,
    /// Canonical name is not one of the cluster's members.
    BadCanonical,
    /// Cluster id does not match its member set.
    ClusterId,
    UnlabeledPresentation,
    /// Methodology record for an unknown presentation.
    OrphanLabel,
    /// Stored normalized name differs from normalizing the original.
    NameNormalization,
    /// Stored position category differs from classifying the raw position.
    PositionCategory,
    /// Normalized and resolved author records do not reconcile.
    RecordCount,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    /// Record key, source id or cluster id of the offending record.
    pub key: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub presentations: usize,
    pub author_records: usize,
    pub clusters: usize,
    pub methodology_records: usize,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Check referential integrity and per-module invariants of a dataset
/// directory. Violations are sorted by kind, then key.
pub fn validate_dataset(dir: &Path) -> Result<ValidationReport, PipelineError> {
    if !dir.join(dataset::RAW_PRESENTATIONS).exists() {
        return Err(PipelineError::Config(format!(
            "{} is not a dataset directory (no {})",
            dir.display(),
            dataset::RAW_PRESENTATIONS
        )));
    }
    let ds = Dataset::load(dir).map_err(io_err(dir))?;
    let normalized_path = dir.join(dataset::NORMALIZED_RECORDS);
    let normalized: Option<Vec<AuthorRecord>> = if normalized_path.exists() {
        Some(crate::util::read_jsonl(&normalized_path).map_err(io_err(&normalized_path))?)
    } else {
        None
    };
    let mut report = ValidationReport {
        presentations: ds.presentations.len(),
        author_records: ds.authors.len(),
        clusters: ds.clusters.len(),
        methodology_records: ds.methodology.len(),
        violations: Vec::new(),
    };
    let mut flag = |kind, key: &str, message: String| {
        report.violations.push(Violation {
            kind,
            key: key.to_string(),
            message,
        })
    };

    let presentations: BTreeSet<&str> = ds
        .presentations
        .iter()
        .map(|p| p.source_id.as_str())
        .collect();
    let clusters: HashMap<&str, &crate::dataset::ClusterRecord> = ds
        .clusters
        .iter()
        .map(|c| (c.cluster_id.as_str(), c))
        .collect();

    let mut seen = BTreeSet::new();
    let mut assigned: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for a in &ds.authors {
        let key = a.record_key.as_str();
        if !seen.insert(key) {
            flag(
                ViolationKind::DuplicateRecordKey,
                key,
                "record key appears more than once".into(),
            );
        }
        if !presentations.contains(a.source_id.as_str()) {
            flag(
                ViolationKind::OrphanRecord,
                key,
                format!("presentation {} does not exist", a.source_id),
            );
        }
        match a.cluster_id.as_deref().map(|id| (id, clusters.get(id))) {
            None => flag(
                ViolationKind::MissingCluster,
                key,
                "no cluster assigned".into(),
            ),
            Some((id, None)) => flag(
                ViolationKind::MissingCluster,
                key,
                format!("cluster {id} does not exist"),
            ),
            Some((id, Some(c))) => {
                assigned.entry(id).or_default().insert(key);
                if !c.members.contains(&a.name_normalized) {
                    flag(
                        ViolationKind::ClusterMembership,
                        key,
                        format!(
                            "name `{}` is not a member of cluster {id}",
                            a.name_normalized
                        ),
                    );
                }
            }
        }
        let renormalized = normalize_name(&a.name_original).normalized;
        if renormalized != a.name_normalized {
            flag(
                ViolationKind::NameNormalization,
                key,
                format!(
                    "`{}` normalizes to `{renormalized}`, stored `{}`",
                    a.name_original, a.name_normalized
                ),
            );
        }
        let category = classify_position(a.position_raw.as_deref());
        if category != a.position_category {
            flag(
                ViolationKind::PositionCategory,
                key,
                format!(
                    "position classifies as {category}, stored {}",
                    a.position_category
                ),
            );
        }
    }

    for c in &ds.clusters {
        let id = c.cluster_id.as_str();
        if !c.members.contains(&c.canonical_name) {
            flag(
                ViolationKind::BadCanonical,
                id,
                format!(
                    "canonical name `{}` is not among its members",
                    c.canonical_name
                ),
            );
        }
        if cluster_id_for(&c.members) != c.cluster_id {
            flag(
                ViolationKind::ClusterId,
                id,
                "id does not match the member set".into(),
            );
        }
        let listed: BTreeSet<&str> = c.record_keys.iter().map(String::as_str).collect();
        let empty = BTreeSet::new();
        let actual = assigned.get(id).unwrap_or(&empty);
        if &listed != actual {
            let diff: Vec<&str> = listed.symmetric_difference(actual).copied().collect();
            flag(
                ViolationKind::ClusterMembership,
                id,
                format!(
                    "record keys disagree with author records: {}",
                    diff.join(", ")
                ),
            );
        }
    }

    let labels: HashMap<&str, bool> = ds
        .methodology
        .iter()
        .map(|m| (m.source_id.as_str(), m.label.is_some()))
        .collect();
    for p in &ds.presentations {
        match labels.get(p.source_id.as_str()) {
            Some(true) => {}
            Some(false) => flag(
                ViolationKind::UnlabeledPresentation,
                &p.source_id,
                "methodology record carries no label".into(),
            ),
            None => flag(
                ViolationKind::UnlabeledPresentation,
                &p.source_id,
                "no methodology record".into(),
            ),
        }
    }
    for m in &ds.methodology {
        if !presentations.contains(m.source_id.as_str()) {
            flag(
                ViolationKind::OrphanLabel,
                &m.source_id,
                "presentation does not exist".into(),
            );
        }
    }

    if let Some(normalized) = &normalized {
        let before: BTreeSet<&str> = normalized.iter().map(|a| a.record_key.as_str()).collect();
        for key in before.symmetric_difference(&seen) {
            let side = if before.contains(key) {
                "normalized but not resolved"
            } else {
                "resolved but never normalized"
            };
            flag(ViolationKind::RecordCount, key, side.into());
        }
    }

    report.violations.sort();
    Ok(report)
}
