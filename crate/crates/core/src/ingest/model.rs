use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::era::check_year;
use super::IngestError;

/// Raw bytes of one archive page as fetched.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageSnapshot {
    pub url: String,
    pub year: u16,
    pub body: String,
    pub fetched_at: DateTime<Utc>,
}

impl PageSnapshot {
    pub fn new(
        url: impl Into<String>,
        year: u16,
        body: impl Into<String>,
        fetched_at: DateTime<Utc>,
    ) -> Result<Self, IngestError> {
        check_year(year)?;
        let body = body.into();
        let url = url.into();
        if body.trim().is_empty() {
            return Err(IngestError::EmptyBody { url });
        }
        Ok(Self {
            url,
            year,
            body,
            fetched_at,
        })
    }

    pub fn source_id(&self) -> String {
        source_id(&self.url)
    }
}

/// Stable identifier for a page: hash of its URL path with query,
/// fragment and trailing slash removed. Host and scheme do not
/// participate, so mirrors of the same archive agree.
pub fn source_id(url: &str) -> String {
    let path = match url::Url::parse(url) {
        Ok(u) => u.path().to_string(),
        Err(_) => url.split(['?', '#']).next().unwrap_or_default().to_string(),
    };
    let path = path.trim_end_matches('/');
    let path = if path.starts_with('/') {
        path.to_string()
    } else {
        format!("/{path}")
    };
    let digest = crate::util::sha256_hex(path.as_bytes());
    format!("p{}", &digest[..15])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresentationFormat {
    Oral,
    Poster,
    SymposiumComponent,
    RoundtableComponent,
    Unknown,
}

/// What kind of program entry a page describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryKind {
    Presentation,
    SymposiumOverview,
    Workshop,
    Keynote,
}

/// Map the session-type label on a page onto format and entry kind.
pub fn classify_session_type(label: Option<&str>) -> (PresentationFormat, EntryKind) {
    let Some(label) = label else {
        return (PresentationFormat::Unknown, EntryKind::Presentation);
    };
    let l = label.to_lowercase();
    if l.contains("workshop") {
        (PresentationFormat::Unknown, EntryKind::Workshop)
    } else if l.contains("keynote") || l.contains("plenary") {
        (PresentationFormat::Unknown, EntryKind::Keynote)
    } else if l.contains("overview") {
        let format = if l.contains("roundtable") {
            PresentationFormat::RoundtableComponent
        } else {
            PresentationFormat::SymposiumComponent
        };
        (format, EntryKind::SymposiumOverview)
    } else if l.contains("symposium") {
        (
            PresentationFormat::SymposiumComponent,
            EntryKind::Presentation,
        )
    } else if l.contains("roundtable") {
        (
            PresentationFormat::RoundtableComponent,
            EntryKind::Presentation,
        )
    } else if l.contains("poster") {
        (PresentationFormat::Poster, EntryKind::Presentation)
    } else if l.contains("oral") || l.contains("paper") {
        (PresentationFormat::Oral, EntryKind::Presentation)
    } else {
        (PresentationFormat::Unknown, EntryKind::Presentation)
    }
}

/// One scraped program entry. Field order is the serialized key order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawPresentation {
    pub source_id: String,
    pub year: u16,
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    pub format: PresentationFormat,
    pub session_title: Option<String>,
    /// Author blocks in page order; index 0 is the first author.
    pub raw_author_blocks: Vec<String>,
    pub kind: EntryKind,
    pub url: String,
}

/// A page that lacked required structure, held for human review.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlaggedPage {
    pub source_id: String,
    pub year: u16,
    pub url: String,
    /// Structural markers not found ("title", "abstract").
    pub missing: Vec<String>,
    pub title: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionReason {
    ShortAbstract,
    WorkshopOrKeynote,
    SymposiumOverview,
    MissingAbstract,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExcludedPresentation {
    pub reason: ExclusionReason,
    pub record: RawPresentation,
}
