use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use chrono::Utc;
use confcurate_core::ingest::*;

fn fixture(name: &str) -> String {
    std::fs::read_to_string(format!(
        "{}/tests/fixtures/ingest/{name}",
        env!("CARGO_MANIFEST_DIR")
    ))
    .unwrap()
}

fn snapshot(url: &str, year: u16, body: &str) -> PageSnapshot {
    PageSnapshot::new(url, year, body, Utc::now()).unwrap()
}

fn modern() -> ParserEra {
    LayoutConfig::default().era_for(2026).unwrap()
}

fn early() -> ParserEra {
    LayoutConfig::default().era_for(2008).unwrap()
}

#[test]
fn index_lists_presentation_links_in_order() {
    let snap = snapshot(
        "https://archive.test/2026/webprogram/start.html",
        2026,
        &fixture("modern_index.html"),
    );
    let refs = parse_program_index(&snap, &modern()).unwrap();
    assert_eq!(refs.len(), 10);
    assert_eq!(
        refs[0],
        "https://archive.test/2026/webprogram/Paper101.html"
    );
    assert_eq!(
        refs[9],
        "https://archive.test/2026/webprogram/Paper110.html"
    );
}

#[test]
fn index_duplicates_collapse() {
    let snap = snapshot(
        "https://archive.test/2026/webprogram/start.html",
        2026,
        &fixture("duplicate_index.html"),
    );
    assert_eq!(parse_program_index(&snap, &modern()).unwrap().len(), 1);
}

#[test]
fn unrecognized_index_names_year_and_marker() {
    let snap = snapshot(
        "https://archive.test/x",
        2012,
        "<html><body><p>moved</p></body></html>",
    );
    let err = parse_program_index(&snap, &modern()).unwrap_err();
    match err {
        IngestError::IndexStructure { year, marker } => {
            assert_eq!(year, 2012);
            assert_eq!(marker, "div.program");
        }
        other => panic!("unexpected {other:?}"),
    }
    assert!(matches!(
        PageSnapshot::new("https://archive.test/x", 2012, "", Utc::now()),
        Err(IngestError::EmptyBody { .. })
    ));
}

#[test]
fn modern_page_keeps_author_order() {
    let snap = snapshot(
        "https://archive.test/2026/webprogram/Paper4187.html",
        2026,
        &fixture("modern_page.html"),
    );
    let rec = parse_presentation_page(&snap, &modern()).unwrap().unwrap();
    assert_eq!(
        rec.title,
        "Caseworker Turnover and Placement Stability in Rural Counties"
    );
    assert_eq!(rec.format, PresentationFormat::Oral);
    assert_eq!(rec.kind, EntryKind::Presentation);
    assert_eq!(
        rec.session_title.as_deref(),
        Some("Child Welfare Workforce")
    );
    assert_eq!(rec.raw_author_blocks.len(), 3);
    assert!(rec.raw_author_blocks[0].starts_with("Maria Gonzalez*"));
    assert!(rec.raw_author_blocks[1].starts_with("Wei Chen"));
    assert!(rec.raw_author_blocks[2].starts_with("Robert T. Hayes"));
    assert!(rec
        .abstract_text
        .starts_with("Background: Caseworker turnover"));
    assert!(rec.abstract_text.ends_with("for 4,210 children."));
    assert_eq!(rec.source_id, source_id(&snap.url));
}

#[test]
fn early_and_modern_layouts_agree() {
    let m = parse_presentation_page(
        &snapshot(
            "https://archive.test/2026/webprogram/Paper4187.html",
            2026,
            &fixture("modern_page.html"),
        ),
        &modern(),
    )
    .unwrap()
    .unwrap();
    let e = parse_presentation_page(
        &snapshot(
            "https://archive.test/2008/techprogram/abstract_4187.htm",
            2008,
            &fixture("early_page.html"),
        ),
        &early(),
    )
    .unwrap()
    .unwrap();
    assert_eq!(e.title, m.title);
    assert_eq!(e.abstract_text, m.abstract_text);
    assert_eq!(e.format, m.format);
    assert_eq!(e.kind, m.kind);
    assert_eq!(e.session_title, m.session_title);
    assert_eq!(e.raw_author_blocks, m.raw_author_blocks);
}

#[test]
fn page_without_abstract_is_flagged() {
    let snap = snapshot(
        "https://archive.test/2020/webprogram/Paper9.html",
        2020,
        &fixture("title_only_page.html"),
    );
    let flag = parse_presentation_page(&snap, &modern())
        .unwrap()
        .unwrap_err();
    assert_eq!(flag.missing, vec!["abstract".to_string()]);
    assert_eq!(flag.title.as_deref(), Some("A Page Without an Abstract"));
}

#[test]
fn parsing_is_deterministic() {
    let snap = snapshot(
        "https://archive.test/2026/webprogram/Paper4187.html",
        2026,
        &fixture("modern_page.html"),
    );
    let a = parse_presentation_page(&snap, &modern()).unwrap();
    let b = parse_presentation_page(&snap, &modern()).unwrap();
    assert_eq!(a, b);
}

fn record(abstract_len: usize, kind: EntryKind) -> RawPresentation {
    RawPresentation {
        source_id: format!("p{abstract_len}"),
        year: 2020,
        title: "A title".into(),
        abstract_text: "x".repeat(abstract_len),
        format: PresentationFormat::Oral,
        session_title: None,
        raw_author_blocks: vec!["A. Author".into()],
        kind,
        url: String::new(),
    }
}

#[test]
fn filter_boundaries_and_reasons() {
    let input = vec![
        record(49, EntryKind::Presentation),
        record(50, EntryKind::Presentation),
        record(0, EntryKind::Presentation),
        record(400, EntryKind::SymposiumOverview),
        record(400, EntryKind::Workshop),
        record(400, EntryKind::Keynote),
    ];
    let n = input.len();
    let (kept, excluded) = filter_presentations(input);
    assert_eq!(kept.len() + excluded.len(), n);
    assert_eq!(kept.len(), 1);
    assert_eq!(kept[0].abstract_text.len(), 50);
    let reasons: Vec<_> = excluded.iter().map(|e| e.reason).collect();
    assert_eq!(
        reasons,
        vec![
            ExclusionReason::ShortAbstract,
            ExclusionReason::MissingAbstract,
            ExclusionReason::SymposiumOverview,
            ExclusionReason::WorkshopOrKeynote,
            ExclusionReason::WorkshopOrKeynote,
        ]
    );
    let json = serde_json::to_string(&excluded[0]).unwrap();
    assert!(json.contains(r#""reason":"short_abstract""#));
}

/// Serves fixed pages and records when each request arrived.
struct MockArchive {
    server: Arc<tiny_http::Server>,
    hits: Arc<Mutex<Vec<(String, Instant)>>>,
    handle: Option<std::thread::JoinHandle<()>>,
}

impl MockArchive {
    fn start(pages: HashMap<String, (u16, String)>) -> Self {
        let server = Arc::new(tiny_http::Server::http("127.0.0.1:0").unwrap());
        let hits = Arc::new(Mutex::new(Vec::new()));
        let (s, h) = (server.clone(), hits.clone());
        let handle = std::thread::spawn(move || {
            for req in s.incoming_requests() {
                let path = req.url().to_string();
                h.lock().unwrap().push((path.clone(), Instant::now()));
                let (status, body) = pages
                    .get(&path)
                    .cloned()
                    .unwrap_or((404, "not found".into()));
                let _ =
                    req.respond(tiny_http::Response::from_string(body).with_status_code(status));
            }
        });
        Self {
            server,
            hits,
            handle: Some(handle),
        }
    }

    fn base(&self) -> String {
        format!("http://{}/", self.server.server_addr().to_ip().unwrap())
    }

    fn hit_count(&self) -> usize {
        self.hits.lock().unwrap().len()
    }
}

impl Drop for MockArchive {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

fn archive_pages(papers: usize) -> HashMap<String, (u16, String)> {
    let mut pages = HashMap::new();
    let links: String = (0..papers)
        .map(|i| format!("<a href=\"Paper{i}.html\">{i}</a>"))
        .collect();
    pages.insert(
        "/2026/webprogram/start.html".to_string(),
        (
            200,
            format!("<html><body><div class=\"program\">{links}</div></body></html>"),
        ),
    );
    for i in 0..papers {
        pages.insert(
            format!("/2026/webprogram/Paper{i}.html"),
            (
                200,
                fixture("modern_page.html").replace("4,210", &format!("{i}")),
            ),
        );
    }
    pages
}

#[test]
fn fetch_program_against_mock_server() {
    let papers = 4;
    let mock = MockArchive::start(archive_pages(papers));
    let dir = tempfile::tempdir().unwrap();
    let mut corpus = Corpus::open(dir.path()).unwrap();
    let delay = Duration::from_millis(40);
    let layouts = LayoutConfig::default();

    let report = fetch_program(&mock.base(), 2026, delay, &mut corpus, &layouts).unwrap();
    assert_eq!(report.snapshots.len(), 1 + papers);
    assert_eq!(report.fetched, 1 + papers);
    assert!(report.failures.is_empty());
    assert_eq!(mock.hit_count(), 1 + papers);

    let times: Vec<Instant> = mock.hits.lock().unwrap().iter().map(|(_, t)| *t).collect();
    for pair in times.windows(2) {
        // Server-side arrival can run a hair ahead of the client clock.
        assert!(pair[1] - pair[0] >= delay - Duration::from_millis(5));
    }

    // Second call is served entirely from the corpus.
    let again = fetch_program(&mock.base(), 2026, delay, &mut corpus, &layouts).unwrap();
    assert_eq!(again.fetched, 0);
    assert_eq!(again.snapshots.len(), 1 + papers);
    assert_eq!(mock.hit_count(), 1 + papers);

    // And the persisted corpus parses offline.
    let reopened = Corpus::open(dir.path()).unwrap();
    let out = ingest_corpus(&reopened, &[2026], &layouts).unwrap();
    assert_eq!(out.pages, papers);
    assert_eq!(out.kept.len(), papers);
}

#[test]
fn page_failures_are_recorded_and_index_4xx_is_fatal() {
    let mut pages = archive_pages(3);
    pages.insert("/2026/webprogram/Paper1.html".into(), (503, "busy".into()));
    let mock = MockArchive::start(pages);
    let dir = tempfile::tempdir().unwrap();
    let mut corpus = Corpus::open(dir.path()).unwrap();
    let layouts = LayoutConfig::default();
    let delay = Duration::from_millis(1);

    let report = fetch_program(&mock.base(), 2026, delay, &mut corpus, &layouts).unwrap();
    assert_eq!(report.snapshots.len(), 3);
    assert_eq!(report.failures.len(), 1);
    assert_eq!(report.failures[0].status, Some(503));

    let err = fetch_program(&mock.base(), 2019, delay, &mut corpus, &layouts).unwrap_err();
    assert!(matches!(
        err,
        IngestError::IndexStatus {
            year: 2019,
            status: 404,
            ..
        }
    ));
}

#[test]
fn fetch_rejects_bad_arguments() {
    let dir = tempfile::tempdir().unwrap();
    let mut corpus = Corpus::open(dir.path()).unwrap();
    let layouts = LayoutConfig::default();
    assert!(matches!(
        fetch_program(
            "http://127.0.0.1:9/",
            1999,
            Duration::from_secs(1),
            &mut corpus,
            &layouts
        ),
        Err(IngestError::UnsupportedYear(1999))
    ));
    assert!(matches!(
        fetch_program(
            "http://127.0.0.1:9/",
            2010,
            Duration::ZERO,
            &mut corpus,
            &layouts
        ),
        Err(IngestError::InvalidPoliteness)
    ));
}
