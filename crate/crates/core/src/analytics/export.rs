use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Figure {
    Growth,
    Methodology,
    Coauthorship,
    CareerStage,
    International,
}

impl Figure {
    pub const ALL: [Figure; 5] = [
        Self::Growth,
        Self::Methodology,
        Self::Coauthorship,
        Self::CareerStage,
        Self::International,
    ];

    pub fn file_name(self) -> &'static str {
        match self {
            Self::Growth => "fig2_growth.csv",
            Self::Methodology => "fig3_methodology.csv",
            Self::Coauthorship => "fig4_coauthorship.csv",
            Self::CareerStage => "fig5_career_stage.csv",
            Self::International => "fig6_international.csv",
        }
    }
}

impl std::str::FromStr for Figure {
    type Err = AnalyticsError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "growth" => Self::Growth,
            "methodology" => Self::Methodology,
            "coauthorship" => Self::Coauthorship,
            "career_stage" => Self::CareerStage,
            "international" => Self::International,
            other => return Err(AnalyticsError::UnknownFigure(other.to_string())),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportOptions {
    /// Career-stage years above this Unknown share are omitted.
    pub unknown_cutoff: f64,
    /// Rows in the country table; all countries when `None`.
    pub country_rows: Option<usize>,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            unknown_cutoff: DEFAULT_UNKNOWN_CUTOFF,
            country_rows: Some(20),
        }
    }
}

/// Percentage with one decimal place.
fn pct(fraction: f64) -> String {
    format!("{:.1}", 100.0 * fraction)
}

fn write_err(path: &Path, e: impl std::fmt::Display) -> AnalyticsError {
    AnalyticsError::Write {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<(), AnalyticsError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| write_err(path, e))?;
    w.write_record(header).map_err(|e| write_err(path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| write_err(path, e))?;
    }
    w.flush().map_err(|e| write_err(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), AnalyticsError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| write_err(path, e))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| write_err(path, e))
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

/// Write one figure's data series as CSV into `dir`, creating it if needed.
pub fn export_figure_series(
    dataset: &Dataset,
    figure: Figure,
    dir: &Path,
    options: &ReportOptions,
) -> Result<PathBuf, AnalyticsError> {
    std::fs::create_dir_all(dir).map_err(|e| write_err(dir, e))?;
    let path = dir.join(figure.file_name());
    match figure {
        Figure::Growth => {
            let rows: Vec<Vec<String>> = yearly_presentation_counts(&dataset.presentations)
                .into_iter()
                .map(|(y, n)| vec![y.to_string(), n.to_string()])
                .collect();
            write_csv(&path, &strings(&["year", "presentations"]), &rows)?;
        }
        Figure::Methodology => {
            let shares = methodology_shares(&dataset.presentations, &dataset.methodology)?;
            let mut header = strings(&["year", "presentations"]);
            header.extend(MethodologyLabel::ALL.iter().map(|l| format!("{l}_pct")));
            let rows: Vec<Vec<String>> = shares
                .per_year
                .iter()
                .map(|(y, s)| {
                    let mut row = vec![y.to_string(), s.n.to_string()];
                    row.extend(MethodologyLabel::ALL.iter().map(|&l| pct(s.share(l))));
                    row
                })
                .collect();
            write_csv(&path, &header, &rows)?;
        }
        Figure::Coauthorship => {
            let metrics = authorship_metrics(&dataset.presentations, &dataset.authors)?;
            let header = strings(&[
                "year",
                "presentations",
                "mean_authors",
                "median_authors",
                "single_author_pct",
                "four_plus_pct",
            ]);
            let rows: Vec<Vec<String>> = metrics
                .iter()
                .map(|(y, m)| {
                    vec![
                        y.to_string(),
                        m.presentations.to_string(),
                        format!("{:.2}", m.mean_authors),
                        format!("{:.1}", m.median_authors),
                        pct(m.single_share()),
                        pct(m.four_plus_share()),
                    ]
                })
                .collect();
            write_csv(&path, &header, &rows)?;
        }
        Figure::CareerStage => {
            let series = career_stage_series(&dataset.authors, options.unknown_cutoff);
            let mut header = strings(&["year", "first_authors"]);
            header.extend(PositionCategory::ALL.iter().map(|c| format!("{c}_pct")));
            let rows: Vec<Vec<String>> =
                series
                    .iter()
                    .map(|(y, counts)| {
                        let total: u64 = counts.values().sum();
                        let mut row = vec![y.to_string(), total.to_string()];
                        row.extend(PositionCategory::ALL.iter().map(|c| {
                            pct(counts.get(c).copied().unwrap_or(0) as f64 / total as f64)
                        }));
                        row
                    })
                    .collect();
            write_csv(&path, &header, &rows)?;
        }
        Figure::International => {
            let geo = geography_metrics(&dataset.authors);
            let header = strings(&[
                "year",
                "known_country_records",
                "international_records",
                "international_pct",
                "unknown_country_records",
            ]);
            let rows: Vec<Vec<String>> = geo
                .international
                .iter()
                .map(|(y, i)| {
                    vec![
                        y.to_string(),
                        i.known.to_string(),
                        i.international.to_string(),
                        i.share().map(pct).unwrap_or_default(),
                        i.unknown.to_string(),
                    ]
                })
                .collect();
            write_csv(&path, &header, &rows)?;
        }
    }
    Ok(path)
}

#[derive(Serialize)]
struct GrowthReport {
    counts: YearSeries<u64>,
    first_year: Option<u16>,
    last_year: Option<u16>,
    cagr: Option<f64>,
    period_means: Vec<PeriodMean>,
}

#[derive(Serialize)]
struct PeriodMean {
    from: u16,
    to: u16,
    mean: Option<f64>,
}

#[derive(Serialize)]
struct MethodologyOverall {
    presentations: u64,
    counts: BTreeMap<MethodologyLabel, u64>,
    pct: BTreeMap<MethodologyLabel, String>,
}

/// Write the summary tables into `reports_dir` and every figure series
/// into `figures_dir`. Returns the files written.
pub fn write_reports(
    dataset: &Dataset,
    reports_dir: &Path,
    figures_dir: &Path,
    options: &ReportOptions,
) -> Result<Vec<PathBuf>, AnalyticsError> {
    for d in [reports_dir, figures_dir] {
        std::fs::create_dir_all(d).map_err(|e| write_err(d, e))?;
    }
    let mut written = Vec::new();

    let path = reports_dir.join("table1.json");
    write_json(&path, &summary(dataset))?;
    written.push(path);

    let path = reports_dir.join("table2.csv");
    let rows: Vec<Vec<String>> = position_role_table(&dataset.authors)
        .iter()
        .map(|r| {
            vec![
                r.category.label().to_string(),
                r.total.to_string(),
                format!("{:.1}", r.pct_of_total),
                format!("{:.1}", r.first_author_pct),
                format!("{:.1}", r.co_author_pct),
            ]
        })
        .collect();
    let header = strings(&[
        "position",
        "total",
        "pct_of_total",
        "first_author_pct",
        "co_author_pct",
    ]);
    write_csv(&path, &header, &rows)?;
    written.push(path);

    let geo = geography_metrics(&dataset.authors);
    let path = reports_dir.join("table3.csv");
    let take = options.country_rows.unwrap_or(usize::MAX);
    let rows: Vec<Vec<String>> = geo
        .countries
        .iter()
        .take(take)
        .enumerate()
        .map(|(i, c)| {
            vec![
                (i + 1).to_string(),
                c.country.clone(),
                c.total.to_string(),
                c.first_author_n.to_string(),
                c.co_author_n.to_string(),
            ]
        })
        .collect();
    let header = strings(&["rank", "country", "total", "first_author_n", "co_author_n"]);
    write_csv(&path, &header, &rows)?;
    written.push(path);

    let counts = yearly_presentation_counts(&dataset.presentations);
    let first = counts.first_key_value().map(|(&y, &n)| (y, n));
    let last = counts.last_key_value().map(|(&y, &n)| (y, n));
    let rate = match (first, last) {
        (Some((y0, n0)), Some((y1, n1))) if y1 > y0 => {
            cagr(n0 as f64, n1 as f64, u32::from(y1 - y0)).ok()
        }
        _ => None,
    };
    let growth = GrowthReport {
        period_means: period_means(&counts)
            .into_iter()
            .map(|((from, to), mean)| PeriodMean { from, to, mean })
            .collect(),
        first_year: first.map(|f| f.0),
        last_year: last.map(|l| l.0),
        cagr: rate,
        counts,
    };
    let path = reports_dir.join("growth.json");
    write_json(&path, &growth)?;
    written.push(path);

    let shares = methodology_shares(&dataset.presentations, &dataset.methodology)?;
    let overall = MethodologyOverall {
        presentations: shares.overall.n,
        pct: MethodologyLabel::ALL
            .iter()
            .map(|&l| (l, pct(shares.overall.share(l))))
            .collect(),
        counts: shares.overall.counts.clone(),
    };
    let path = reports_dir.join("methodology.json");
    write_json(&path, &overall)?;
    written.push(path);

    let path = reports_dir.join("geography.json");
    write_json(&path, &geo)?;
    written.push(path);

    for figure in Figure::ALL {
        written.push(export_figure_series(dataset, figure, figures_dir, options)?);
    }
    Ok(written)
}
