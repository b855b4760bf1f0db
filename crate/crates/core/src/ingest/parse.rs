use scraper::{ElementRef, Html, Selector};

use super::era::ParserEra;
use super::model::*;
use super::IngestError;

fn selector(css: &str) -> Result<Selector, IngestError> {
    Selector::parse(css).map_err(|e| IngestError::Selector {
        selector: css.to_string(),
        message: e.to_string(),
    })
}

fn element_text(el: ElementRef<'_>) -> String {
    let joined: Vec<&str> = el.text().collect();
    crate::util::collapse_whitespace(&joined.join(" "))
}

fn first_text(doc: &Html, css: &str) -> Result<Option<String>, IngestError> {
    let sel = selector(css)?;
    Ok(doc.select(&sel).next().map(element_text))
}

/// Presentation links from an index page, resolved against the page URL,
/// in page order with duplicates removed.
pub fn parse_program_index(
    snapshot: &PageSnapshot,
    era: &ParserEra,
) -> Result<Vec<String>, IngestError> {
    if snapshot.body.trim().is_empty() {
        return Err(IngestError::IndexStructure {
            year: snapshot.year,
            marker: "<body>".into(),
        });
    }
    let doc = Html::parse_document(&snapshot.body);
    let container_sel = selector(&era.selectors.index_container)?;
    let link_sel = selector(&era.selectors.index_link)?;
    let Some(container) = doc.select(&container_sel).next() else {
        return Err(IngestError::IndexStructure {
            year: snapshot.year,
            marker: era.selectors.index_container.clone(),
        });
    };
    let base = url::Url::parse(&snapshot.url).ok();
    let mut seen = std::collections::HashSet::new();
    let mut refs = Vec::new();
    for a in container.select(&link_sel) {
        let Some(href) = a
            .value()
            .attr("href")
            .map(str::trim)
            .filter(|h| !h.is_empty())
        else {
            continue;
        };
        let resolved = match &base {
            Some(b) => b
                .join(href)
                .map(|u| u.to_string())
                .unwrap_or_else(|_| href.to_string()),
            None => href.to_string(),
        };
        let key = source_id(&resolved);
        if seen.insert(key) {
            refs.push(resolved);
        }
    }
    Ok(refs)
}

/// Parse one presentation page. Pages without a title or an abstract
/// division come back as [`FlaggedPage`] for the review queue.
pub fn parse_presentation_page(
    snapshot: &PageSnapshot,
    era: &ParserEra,
) -> Result<Result<RawPresentation, FlaggedPage>, IngestError> {
    let s = &era.selectors;
    let doc = Html::parse_document(&snapshot.body);
    let title = first_text(&doc, &s.title)?.filter(|t| !t.is_empty());
    let abstract_text = first_text(&doc, &s.abstract_body)?;

    let mut missing = Vec::new();
    if title.is_none() {
        missing.push("title".to_string());
    }
    if abstract_text.is_none() {
        missing.push("abstract".to_string());
    }
    if !missing.is_empty() {
        return Ok(Err(FlaggedPage {
            source_id: snapshot.source_id(),
            year: snapshot.year,
            url: snapshot.url.clone(),
            missing,
            title,
        }));
    }

    let author_sel = selector(&s.author)?;
    let raw_author_blocks = doc
        .select(&author_sel)
        .map(element_text)
        .filter(|t| !t.is_empty())
        .collect();
    let session_title = first_text(&doc, &s.session_title)?.filter(|t| !t.is_empty());
    let session_type = first_text(&doc, &s.session_type)?;
    let (format, kind) = classify_session_type(session_type.as_deref());

    Ok(Ok(RawPresentation {
        source_id: snapshot.source_id(),
        year: snapshot.year,
        title: title.unwrap_or_default(),
        abstract_text: abstract_text.unwrap_or_default(),
        format,
        session_title,
        raw_author_blocks,
        kind,
        url: snapshot.url.clone(),
    }))
}

pub const MIN_ABSTRACT_CHARS: usize = 50;

/// Split records into kept and excluded. Total: every input lands in
/// exactly one of the two lists.
pub fn filter_presentations(
    records: Vec<RawPresentation>,
) -> (Vec<RawPresentation>, Vec<ExcludedPresentation>) {
    let mut kept = Vec::new();
    let mut excluded = Vec::new();
    for record in records {
        let reason = match record.kind {
            EntryKind::Workshop | EntryKind::Keynote => Some(ExclusionReason::WorkshopOrKeynote),
            EntryKind::SymposiumOverview => Some(ExclusionReason::SymposiumOverview),
            EntryKind::Presentation => {
                let len = record.abstract_text.trim().chars().count();
                if len == 0 {
                    Some(ExclusionReason::MissingAbstract)
                } else if len < MIN_ABSTRACT_CHARS {
                    Some(ExclusionReason::ShortAbstract)
                } else if record.title.trim().is_empty() {
                    Some(ExclusionReason::MissingAbstract)
                } else {
                    None
                }
            }
        };
        match reason {
            Some(reason) => excluded.push(ExcludedPresentation { reason, record }),
            None => kept.push(record),
        }
    }
    (kept, excluded)
}
