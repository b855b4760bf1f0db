use std::time::{Duration, Instant};

use chrono::Utc;
use serde::{Deserialize, Serialize};

use super::corpus::{Corpus, SnapshotKind};
use super::era::LayoutConfig;
use super::model::PageSnapshot;
use super::parse::parse_program_index;
use super::IngestError;

pub const DEFAULT_POLITENESS: Duration = Duration::from_secs(1);

/// A presentation page that could not be fetched. These are retriable:
/// the page is simply absent from the corpus and a later run tries again.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FetchFailure {
    pub url: String,
    pub status: Option<u16>,
    pub message: String,
}

#[derive(Debug, Default)]
pub struct FetchReport {
    /// Index snapshot first, then one snapshot per presentation page.
    pub snapshots: Vec<PageSnapshot>,
    /// Requests actually sent during this call.
    pub fetched: usize,
    /// Pages served from the corpus without a request.
    pub cached: usize,
    pub failures: Vec<FetchFailure>,
}

/// Single-worker HTTP client that keeps at least `delay` between requests.
struct PoliteClient {
    agent: ureq::Agent,
    delay: Duration,
    last: Option<Instant>,
}

enum Outcome {
    Ok(String),
    Status(u16),
    Network(String),
}

impl PoliteClient {
    fn new(delay: Duration) -> Self {
        let config = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(60)))
            .user_agent(concat!("confcurate/", env!("CARGO_PKG_VERSION")))
            .build();
        Self {
            agent: ureq::Agent::new_with_config(config),
            delay,
            last: None,
        }
    }

    fn get(&mut self, url: &str) -> Outcome {
        if let Some(last) = self.last {
            let elapsed = last.elapsed();
            if elapsed < self.delay {
                std::thread::sleep(self.delay - elapsed);
            }
        }
        self.last = Some(Instant::now());
        match self.agent.get(url).call() {
            Ok(mut resp) => {
                let status = resp.status().as_u16();
                if !(200..300).contains(&status) {
                    return Outcome::Status(status);
                }
                match resp.body_mut().read_to_string() {
                    Ok(body) => Outcome::Ok(body),
                    Err(e) => Outcome::Network(e.to_string()),
                }
            }
            Err(e) => Outcome::Network(e.to_string()),
        }
    }
}

/// Fetch the program index for `year` and every presentation it links to,
/// persisting each page in `corpus`. Pages already present are reused
/// without a request, so a repeated call sends nothing.
///
/// A failing presentation page is recorded in [`FetchReport::failures`]
/// and the run continues. A failing index page is fatal for the year.
pub fn fetch_program(
    base_url: &str,
    year: u16,
    politeness: Duration,
    corpus: &mut Corpus,
    layouts: &LayoutConfig,
) -> Result<FetchReport, IngestError> {
    if politeness.is_zero() {
        return Err(IngestError::InvalidPoliteness);
    }
    let era = layouts.era_for(year)?;
    let mut base = url::Url::parse(base_url).map_err(|e| IngestError::Url {
        url: base_url.to_string(),
        message: e.to_string(),
    })?;
    if !base.path().ends_with('/') {
        let path = format!("{}/", base.path());
        base.set_path(&path);
    }
    let index_url = base
        .join(&era.selectors.index_path_for(year))
        .map_err(|e| IngestError::Url {
            url: base_url.to_string(),
            message: e.to_string(),
        })?
        .to_string();

    let mut client = PoliteClient::new(politeness);
    let mut report = FetchReport::default();

    let index = match corpus.entry_for_url(&index_url).cloned() {
        Some(entry) => {
            report.cached += 1;
            corpus.read_snapshot(&entry)?
        }
        None => match client.get(&index_url) {
            Outcome::Ok(body) => {
                report.fetched += 1;
                let snap = PageSnapshot::new(index_url.clone(), year, body, Utc::now())?;
                // Validate before persisting so a bad index is not cached.
                parse_program_index(&snap, &era)?;
                corpus.store(&snap, SnapshotKind::Index)?;
                snap
            }
            Outcome::Status(status) => {
                return Err(IngestError::IndexStatus {
                    year,
                    url: index_url,
                    status,
                })
            }
            Outcome::Network(message) => {
                return Err(IngestError::IndexUnreachable {
                    year,
                    url: index_url,
                    message,
                })
            }
        },
    };
    let links = parse_program_index(&index, &era)?;
    report.snapshots.push(index);

    for link in links {
        if let Some(entry) = corpus.entry_for_url(&link).cloned() {
            report.cached += 1;
            report.snapshots.push(corpus.read_snapshot(&entry)?);
            continue;
        }
        let failure = match client.get(&link) {
            Outcome::Ok(body) => {
                report.fetched += 1;
                match PageSnapshot::new(link.clone(), year, body, Utc::now()) {
                    Ok(snap) => {
                        corpus.store(&snap, SnapshotKind::Page)?;
                        report.snapshots.push(snap);
                        continue;
                    }
                    Err(e) => FetchFailure {
                        url: link,
                        status: None,
                        message: e.to_string(),
                    },
                }
            }
            Outcome::Status(status) => {
                report.fetched += 1;
                FetchFailure {
                    url: link,
                    status: Some(status),
                    message: format!("HTTP {status}"),
                }
            }
            Outcome::Network(message) => FetchFailure {
                url: link,
                status: None,
                message,
            },
        };
        report.failures.push(failure);
    }
    Ok(report)
}
