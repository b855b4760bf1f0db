//! Longitudinal statistics over a curated dataset.
//!
//! Everything is computed from integer counts; rounding happens only when
//! reports are written (one decimal place for percentages).

mod export;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

pub use export::{export_figure_series, write_reports, Figure, ReportOptions};

use crate::dataset::{AuthorRecord, Dataset};
use crate::ingest::RawPresentation;
use crate::methodology::{MethodologyLabel, MethodologyRecord};
use crate::normalize::{PositionCategory, USA};

/// Phase boundaries used for period averages of the yearly counts.
pub const PERIODS: [(u16, u16); 3] = [(2005, 2011), (2012, 2016), (2017, 2026)];

/// Default cutoff above which a year's first-author positions count as
/// missing and the year is left out of the career-stage series.
pub const DEFAULT_UNKNOWN_CUTOFF: f64 = 0.99;

pub type YearSeries<T> = BTreeMap<u16, T>;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum AnalyticsError {
    #[error("CAGR needs positive endpoints and at least one year (begin {begin}, end {end}, years {years})")]
    InvalidGrowth { begin: f64, end: f64, years: u32 },
    #[error("{} presentation(s) lack a methodology label: {}", .0.len(), .0.join(", "))]
    Unlabeled(Vec<String>),
    #[error("{} presentation(s) have no authors: {}", .0.len(), .0.join(", "))]
    NoAuthors(Vec<String>),
    #[error("unknown figure `{0}` (expected growth, methodology, coauthorship, career_stage or international)")]
    UnknownFigure(String),
    #[error("writing {path}: {message}")]
    Write { path: String, message: String },
}

/// Compound annual growth rate, `(end / begin)^(1 / years) - 1`.
pub fn cagr(begin: f64, end: f64, years: u32) -> Result<f64, AnalyticsError> {
    if !(begin > 0.0 && end > 0.0 && years >= 1 && begin.is_finite() && end.is_finite()) {
        return Err(AnalyticsError::InvalidGrowth { begin, end, years });
    }
    Ok((end / begin).powf(1.0 / f64::from(years)) - 1.0)
}

pub fn yearly_presentation_counts(presentations: &[RawPresentation]) -> YearSeries<u64> {
    let mut out = YearSeries::new();
    for p in presentations {
        *out.entry(p.year).or_default() += 1;
    }
    out
}

/// Mean of yearly counts over each period in [`PERIODS`], using only the
/// years present in `counts`.
pub fn period_means(counts: &YearSeries<u64>) -> Vec<((u16, u16), Option<f64>)> {
    PERIODS
        .iter()
        .map(|&(a, b)| {
            let v: Vec<u64> = counts.range(a..=b).map(|(_, &c)| c).collect();
            let mean = (!v.is_empty()).then(|| v.iter().sum::<u64>() as f64 / v.len() as f64);
            ((a, b), mean)
        })
        .collect()
}

/// Label counts and their shares within one group of presentations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelShares {
    pub n: u64,
    pub counts: BTreeMap<MethodologyLabel, u64>,
}

impl LabelShares {
    fn new() -> Self {
        Self {
            n: 0,
            counts: MethodologyLabel::ALL.iter().map(|&l| (l, 0)).collect(),
        }
    }

    fn add(&mut self, label: MethodologyLabel) {
        self.n += 1;
        *self.counts.entry(label).or_default() += 1;
    }

    pub fn share(&self, label: MethodologyLabel) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.counts.get(&label).copied().unwrap_or(0) as f64 / self.n as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodologyShares {
    pub overall: LabelShares,
    pub per_year: YearSeries<LabelShares>,
}

/// Per-year and overall label proportions. Every presentation must carry
/// a label.
pub fn methodology_shares(
    presentations: &[RawPresentation],
    labels: &[MethodologyRecord],
) -> Result<MethodologyShares, AnalyticsError> {
    let by_id: HashMap<&str, MethodologyLabel> = labels
        .iter()
        .filter_map(|r| r.label.map(|l| (r.source_id.as_str(), l)))
        .collect();
    let missing: Vec<String> = presentations
        .iter()
        .filter(|p| !by_id.contains_key(p.source_id.as_str()))
        .map(|p| p.source_id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(AnalyticsError::Unlabeled(missing));
    }
    let mut overall = LabelShares::new();
    let mut per_year: YearSeries<LabelShares> = YearSeries::new();
    for p in presentations {
        let label = by_id[p.source_id.as_str()];
        overall.add(label);
        per_year
            .entry(p.year)
            .or_insert_with(LabelShares::new)
            .add(label);
    }
    Ok(MethodologyShares { overall, per_year })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuthorshipYear {
    pub presentations: u64,
    pub author_records: u64,
    pub mean_authors: f64,
    pub median_authors: f64,
    pub single_author: u64,
    pub four_plus: u64,
}

impl AuthorshipYear {
    pub fn single_share(&self) -> f64 {
        self.single_author as f64 / self.presentations as f64
    }

    pub fn four_plus_share(&self) -> f64 {
        self.four_plus as f64 / self.presentations as f64
    }
}

fn median(sorted: &[u64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2] as f64
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) as f64 / 2.0
    }
}

/// Team-size statistics per year. Author counts come from the author
/// records joined on `source_id`.
pub fn authorship_metrics(
    presentations: &[RawPresentation],
    authors: &[AuthorRecord],
) -> Result<YearSeries<AuthorshipYear>, AnalyticsError> {
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for a in authors {
        *counts.entry(a.source_id.as_str()).or_default() += 1;
    }
    let empty: Vec<String> = presentations
        .iter()
        .filter(|p| !counts.contains_key(p.source_id.as_str()))
        .map(|p| p.source_id.clone())
        .collect();
    if !empty.is_empty() {
        return Err(AnalyticsError::NoAuthors(empty));
    }
    let mut per_year: YearSeries<Vec<u64>> = YearSeries::new();
    for p in presentations {
        per_year
            .entry(p.year)
            .or_default()
            .push(counts[p.source_id.as_str()]);
    }
    Ok(per_year
        .into_iter()
        .map(|(year, mut v)| {
            v.sort_unstable();
            let total: u64 = v.iter().sum();
            let row = AuthorshipYear {
                presentations: v.len() as u64,
                author_records: total,
                mean_authors: total as f64 / v.len() as f64,
                median_authors: median(&v),
                single_author: v.iter().filter(|&&c| c == 1).count() as u64,
                four_plus: v.iter().filter(|&&c| c >= 4).count() as u64,
            };
            (year, row)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionRoleRow {
    pub category: PositionCategory,
    pub total: u64,
    pub first_author_n: u64,
    pub co_author_n: u64,
    pub pct_of_total: f64,
    pub first_author_pct: f64,
    pub co_author_pct: f64,
}

/// Author records by position category with first/co-author splits,
/// sorted by total descending (ties in taxonomy order).
pub fn position_role_table(authors: &[AuthorRecord]) -> Vec<PositionRoleRow> {
    let mut counts: BTreeMap<PositionCategory, (u64, u64)> = BTreeMap::new();
    for a in authors {
        let slot = counts.entry(a.position_category).or_default();
        if a.is_first_author() {
            slot.0 += 1;
        } else {
            slot.1 += 1;
        }
    }
    let n = authors.len() as f64;
    let mut rows: Vec<PositionRoleRow> = counts
        .into_iter()
        .map(|(category, (first, co))| {
            let total = first + co;
            PositionRoleRow {
                category,
                total,
                first_author_n: first,
                co_author_n: co,
                pct_of_total: 100.0 * total as f64 / n,
                first_author_pct: 100.0 * first as f64 / total as f64,
                co_author_pct: 100.0 * co as f64 / total as f64,
            }
        })
        .collect();
    rows.sort_by(|a, b| b.total.cmp(&a.total).then(a.category.cmp(&b.category)));
    rows
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountryRoleRow {
    pub country: String,
    pub total: u64,
    pub first_author_n: u64,
    pub co_author_n: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InternationalYear {
    /// Records with a known country (the denominator).
    pub known: u64,
    pub international: u64,
    /// Records without a country, reported but not in the denominator.
    pub unknown: u64,
}

impl InternationalYear {
    pub fn share(&self) -> Option<f64> {
        (self.known > 0).then(|| self.international as f64 / self.known as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeographyReport {
    /// Countries ranked by total records, then name.
    pub countries: Vec<CountryRoleRow>,
    pub international: YearSeries<InternationalYear>,
    pub unknown_country_records: u64,
}

pub fn geography_metrics(authors: &[AuthorRecord]) -> GeographyReport {
    let mut by_country: BTreeMap<&str, (u64, u64)> = BTreeMap::new();
    let mut international: YearSeries<InternationalYear> = YearSeries::new();
    let mut unknown = 0;
    for a in authors {
        let year = international.entry(a.year).or_insert(InternationalYear {
            known: 0,
            international: 0,
            unknown: 0,
        });
        match a.country.as_deref() {
            Some(c) => {
                year.known += 1;
                if c != USA {
                    year.international += 1;
                }
                let slot = by_country.entry(c).or_default();
                if a.is_first_author() {
                    slot.0 += 1;
                } else {
                    slot.1 += 1;
                }
            }
            None => {
                year.unknown += 1;
                unknown += 1;
            }
        }
    }
    let mut countries: Vec<CountryRoleRow> = by_country
        .into_iter()
        .map(|(c, (first, co))| CountryRoleRow {
            country: c.to_string(),
            total: first + co,
            first_author_n: first,
            co_author_n: co,
        })
        .collect();
    countries.sort_by(|a, b| {
        b.total
            .cmp(&a.total)
            .then_with(|| a.country.cmp(&b.country))
    });
    GeographyReport {
        countries,
        international,
        unknown_country_records: unknown,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub total_abstracts: u64,
    pub total_author_records: u64,
    pub unique_authors: u64,
    pub unique_institutions: u64,
    pub unique_countries: u64,
    pub years_covered: u64,
    pub first_year: Option<u16>,
    pub last_year: Option<u16>,
}

pub fn summary(dataset: &Dataset) -> SummaryStats {
    let institutions: BTreeSet<&str> = dataset
        .authors
        .iter()
        .filter_map(|a| a.institution.as_deref())
        .filter(|s| !s.is_empty())
        .collect();
    let countries: BTreeSet<&str> = dataset
        .authors
        .iter()
        .filter_map(|a| a.country.as_deref())
        .collect();
    let years: BTreeSet<u16> = dataset.presentations.iter().map(|p| p.year).collect();
    SummaryStats {
        total_abstracts: dataset.presentations.len() as u64,
        total_author_records: dataset.authors.len() as u64,
        unique_authors: dataset.clusters.len() as u64,
        unique_institutions: institutions.len() as u64,
        unique_countries: countries.len() as u64,
        years_covered: years.len() as u64,
        first_year: years.first().copied(),
        last_year: years.last().copied(),
    }
}

/// First-author position shares per year. Years whose Unknown share
/// exceeds `unknown_cutoff` are dropped.
pub fn career_stage_series(
    authors: &[AuthorRecord],
    unknown_cutoff: f64,
) -> YearSeries<BTreeMap<PositionCategory, u64>> {
    let mut per_year: YearSeries<BTreeMap<PositionCategory, u64>> = YearSeries::new();
    for a in authors.iter().filter(|a| a.is_first_author()) {
        *per_year
            .entry(a.year)
            .or_default()
            .entry(a.position_category)
            .or_default() += 1;
    }
    per_year.retain(|_, counts| {
        let total: u64 = counts.values().sum();
        let unknown = counts.get(&PositionCategory::Unknown).copied().unwrap_or(0);
        unknown as f64 / total as f64 <= unknown_cutoff
    });
    per_year
}
