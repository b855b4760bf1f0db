//! A synthetic three-year program archive with known ground truth.
//!
//! The corpus covers one early-layout year and two modern-layout years,
//! seeds every exclusion rule plus one structurally broken page, and
//! records for each author block the normalized name, identity, position
//! category, institution and country the pipeline must recover. Tests and
//! demos use it to exercise the full pipeline offline.

use std::path::Path;

use chrono::{DateTime, TimeZone, Utc};

use crate::ingest::{
    Corpus, ExclusionReason, IngestError, PageSnapshot, SnapshotKind, LAST_EARLY_YEAR,
};
use crate::methodology::MethodologyLabel;
use crate::normalize::PositionCategory;

pub const FIXTURE_BASE_URL: &str = "https://archive.example.org/";
pub const FIXTURE_YEARS: [u16; 3] = [2008, 2015, 2024];

/// One researcher. Every spelling in `spellings` must resolve to one
/// identity whose canonical name is `canonical`.
#[derive(Debug, Clone)]
pub struct FixturePerson {
    pub canonical: &'static str,
    pub spellings: &'static [&'static str],
    pub degrees: &'static str,
    pub position: &'static str,
    pub category: PositionCategory,
    pub department: Option<&'static str>,
    pub institutions: &'static [&'static str],
    pub institution: &'static str,
    pub location: &'static str,
    pub country: &'static str,
}

#[allow(clippy::too_many_arguments)]
const fn person(
    canonical: &'static str,
    spellings: &'static [&'static str],
    degrees: &'static str,
    position: &'static str,
    category: PositionCategory,
    department: Option<&'static str>,
    institutions: &'static [&'static str],
    institution: &'static str,
    location: &'static str,
    country: &'static str,
) -> FixturePerson {
    FixturePerson {
        canonical,
        spellings,
        degrees,
        position,
        category,
        department,
        institutions,
        institution,
        location,
        country,
    }
}

use PositionCategory as P;

/// Distinct people never share a blocking key, except the two Kims and
/// the two Lees, whose restricted surnames must keep them apart.
pub const PEOPLE: [FixturePerson; 16] = [
    person(
        "Maria Gonzalez",
        &["Maria Gonzalez", "María González"],
        "PhD",
        "Associate Professor",
        P::AssociateProfessor,
        Some("School of Social Work"),
        &["University of Michigan", "U. Michigan"],
        "University of Michigan",
        "Ann Arbor, MI",
        "USA",
    ),
    person(
        "Michael S. Sherraden",
        &["Michael S. Sherraden", "Michael Sherraden"],
        "PhD",
        "Professor",
        P::FullProfessor,
        None,
        &["Washington University in St. Louis", "WashU"],
        "Washington University in St. Louis",
        "St. Louis, MO",
        "USA",
    ),
    person(
        "Wei Chen",
        &["Wei Chen"],
        "MSW",
        "Doctoral Student",
        P::DoctoralStudent,
        None,
        &["University of Toronto"],
        "University of Toronto",
        "Toronto, ON, Canada",
        "Canada",
    ),
    person(
        "Ji-Won Kim",
        &["Ji-Won Kim"],
        "PhD",
        "Assistant Professor",
        P::AssistantProfessor,
        Some("Department of Social Welfare"),
        &["Seoul National University"],
        "Seoul National University",
        "Seoul, Republic of Korea",
        "South Korea",
    ),
    person(
        "Jae Kim",
        &["Jae Kim"],
        "MSW",
        "Research Associate",
        P::ResearchStaff,
        None,
        &["Columbia University"],
        "Columbia University",
        "New York, NY",
        "USA",
    ),
    person(
        "Robert T. Hayes",
        &["Robert T. Hayes", "Robert Hayes"],
        "MSW",
        "Director",
        P::SeniorLeadershipPractice,
        None,
        &["Smallville Family Services"],
        "Smallville Family Services",
        "Columbus, OH",
        "USA",
    ),
    person(
        "Thomas Muller",
        &["Thomas Müller", "Thomas Muller"],
        "PhD",
        "Postdoctoral Fellow",
        P::Postdoctoral,
        None,
        &["University of Zurich"],
        "University of Zurich",
        "Zurich, Switzerland",
        "Switzerland",
    ),
    person(
        "Hannah Lee",
        &["Hannah Lee"],
        "PhD",
        "Lecturer",
        P::Instructor,
        None,
        &["University of Edinburgh"],
        "University of Edinburgh",
        "Edinburgh, UK",
        "United Kingdom",
    ),
    person(
        "Harold Lee",
        &["Harold Lee"],
        "LCSW",
        "Clinical Social Worker",
        P::Practitioner,
        None,
        &["Henry Ford Health"],
        "Henry Ford Health",
        "Detroit, MI",
        "USA",
    ),
    person(
        "Kwame Mensah",
        &["Kwame Mensah"],
        "PhD",
        "Senior Lecturer",
        P::Instructor,
        None,
        &["University of Ghana"],
        "University of Ghana",
        "Accra, Ghana",
        "Ghana",
    ),
    person(
        "Priya Raman",
        &["Priya Raman"],
        "MSW",
        "PhD Candidate",
        P::DoctoralStudent,
        None,
        &["Wayne State University"],
        "Wayne State University",
        "Detroit, MI",
        "USA",
    ),
    person(
        "Sarah E. Johnson",
        &["Sarah E. Johnson", "Sarah Johnson"],
        "PhD, MSW",
        "Associate Professor",
        P::AssociateProfessor,
        None,
        &[
            "Columbia University School of Social Work",
            "Columbia University",
        ],
        "Columbia University",
        "New York, NY",
        "USA",
    ),
    person(
        "Daniel Okafor",
        &["Daniel Okafor"],
        "BA",
        "Research Assistant",
        P::ResearchStaff,
        None,
        &["University of Michigan-Ann Arbor"],
        "University of Michigan",
        "Ann Arbor, MI",
        "USA",
    ),
    person(
        "Li Na Zhang",
        &["Li Na Zhang"],
        "PhD",
        "Associate Professor",
        P::AssociateProfessor,
        None,
        &["Peking University"],
        "Peking University",
        "Beijing, P.R. China",
        "China",
    ),
    person(
        "Emily Tran",
        &["Emily Tran"],
        "",
        "Master's Student",
        P::MastersStudent,
        None,
        &["U-M"],
        "University of Michigan",
        "Ann Arbor, Michigan",
        "USA",
    ),
    person(
        "Laura Gomez",
        &["Laura Gomez"],
        "LMSW",
        "Program Manager",
        P::Practitioner,
        None,
        &["Harris County Youth Services"],
        "Harris County Youth Services",
        "Houston, TX",
        "USA",
    ),
];

/// Ground truth for one author block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixtureAuthor {
    /// Index into [`PEOPLE`].
    pub person: usize,
    pub block: String,
    pub name_normalized: String,
    pub category: PositionCategory,
    pub institution: String,
    pub country: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FixtureOutcome {
    Kept(MethodologyLabel),
    Excluded(ExclusionReason),
    /// Page lacks its abstract division.
    Flagged,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixturePresentation {
    pub url: String,
    pub year: u16,
    pub title: String,
    pub abstract_text: String,
    pub session_type: &'static str,
    pub authors: Vec<FixtureAuthor>,
    pub outcome: FixtureOutcome,
}

impl FixturePresentation {
    pub fn label(&self) -> Option<MethodologyLabel> {
        match self.outcome {
            FixtureOutcome::Kept(l) => Some(l),
            _ => None,
        }
    }
}

const TOPICS: [&str; 12] = [
    "kinship foster care",
    "school social work",
    "housing instability",
    "older adults in rural areas",
    "caseworker turnover",
    "refugee resettlement",
    "youth mental health",
    "intimate partner violence",
    "financial capability",
    "substance use treatment",
    "juvenile justice diversion",
    "community health workers",
];

fn abstract_for(label: MethodologyLabel, topic: &str, k: usize) -> String {
    use MethodologyLabel::*;
    match label {
        Quantitative => format!(
            "We analyzed survey data from {} households using logistic regression to estimate how {topic} relates to service use. Associations were statistically significant.",
            300 + 17 * k
        ),
        Qualitative => format!(
            "Drawing on semi-structured interviews with {} caregivers, this study used thematic analysis to describe the lived experience of {topic}.",
            12 + k
        ),
        MixedMethods => format!(
            "This mixed methods study paired an agency staff questionnaire with practitioner discussions, integrating both strands to understand {topic}."
        ),
        Review => format!(
            "We conducted a systematic review of {} studies on {topic}, following PRISMA guidance for study selection and appraisal.",
            20 + k
        ),
        TheoreticalOther => format!(
            "This paper proposes a conceptual framework for {topic}, drawing on critical theory and professional values to guide practice and policy."
        ),
    }
}

const LABEL_CYCLE: [MethodologyLabel; 8] = [
    MethodologyLabel::Quantitative,
    MethodologyLabel::Qualitative,
    MethodologyLabel::Quantitative,
    MethodologyLabel::MixedMethods,
    MethodologyLabel::Review,
    MethodologyLabel::Quantitative,
    MethodologyLabel::TheoreticalOther,
    MethodologyLabel::Qualitative,
];

const SESSION_TYPES: [&str; 3] = ["Oral Presentation", "Poster Presentation", "Symposium"];

/// Kept presentations, team-size cycle and first person offset per year.
const YEAR_PLAN: [(u16, usize, &[usize], usize); 3] = [
    (2008, 10, &[1, 2, 2, 3, 1], 0),
    (2015, 12, &[2, 3, 1, 4, 3, 2], 5),
    (2024, 14, &[3, 4, 2, 5, 3, 4, 6], 9),
];

/// The synthetic archive and its ground truth.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixtureCorpus {
    pub presentations: Vec<FixturePresentation>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

impl FixtureCorpus {
    /// The fixed fixture. Generation is deterministic.
    pub fn standard() -> Self {
        let mut uses = [0usize; PEOPLE.len()];
        let mut presentations = Vec::new();
        for &(year, kept, sizes, offset) in &YEAR_PLAN {
            let early = year <= LAST_EARLY_YEAR;
            let mut next_page = 0usize;
            let mut url = |year: u16| {
                next_page += 1;
                if early {
                    format!(
                        "{FIXTURE_BASE_URL}{year}/techprogram/abstract_{year}_{next_page:03}.htm"
                    )
                } else {
                    format!("{FIXTURE_BASE_URL}{year}/webprogram/Paper{year}{next_page:03}.html")
                }
            };
            for k in 0..kept {
                let size = sizes[k % sizes.len()];
                let start = (offset + 3 * k) % PEOPLE.len();
                let authors = (0..size)
                    .map(|j| {
                        let id = (start + j) % PEOPLE.len();
                        let use_no = uses[id];
                        uses[id] += 1;
                        author_block(id, use_no, early)
                    })
                    .collect();
                let label = LABEL_CYCLE[(k + year as usize) % LABEL_CYCLE.len()];
                let topic = TOPICS[(k + year as usize) % TOPICS.len()];
                presentations.push(FixturePresentation {
                    url: url(year),
                    year,
                    title: format!("Evidence on {topic}: study {}", k + 1),
                    abstract_text: abstract_for(label, topic, k),
                    session_type: SESSION_TYPES[k % SESSION_TYPES.len()],
                    authors,
                    outcome: FixtureOutcome::Kept(label),
                });
            }
            for (session_type, abstract_text, outcome) in seeded_exclusions(year) {
                let authors = vec![author_block((offset + 1) % PEOPLE.len(), 0, early)];
                presentations.push(FixturePresentation {
                    url: url(year),
                    year,
                    title: format!("Session material {year}"),
                    abstract_text: abstract_text.to_string(),
                    session_type,
                    authors,
                    outcome,
                });
            }
        }
        Self { presentations }
    }

    pub fn years(&self) -> Vec<u16> {
        FIXTURE_YEARS.to_vec()
    }

    pub fn kept(&self) -> impl Iterator<Item = &FixturePresentation> {
        self.presentations
            .iter()
            .filter(|p| matches!(p.outcome, FixtureOutcome::Kept(_)))
    }

    /// Render every page and index into `corpus_dir`.
    pub fn write(&self, corpus_dir: &Path) -> Result<Corpus, IngestError> {
        let mut corpus = Corpus::open(corpus_dir)?;
        let at: DateTime<Utc> = Utc.with_ymd_and_hms(2026, 1, 15, 12, 0, 0).unwrap();
        for year in FIXTURE_YEARS {
            let pages: Vec<&FixturePresentation> = self
                .presentations
                .iter()
                .filter(|p| p.year == year)
                .collect();
            let early = year <= LAST_EARLY_YEAR;
            let index_url = if early {
                format!("{FIXTURE_BASE_URL}{year}/techprogram/start.html")
            } else {
                format!("{FIXTURE_BASE_URL}{year}/webprogram/start.html")
            };
            let links: String = pages
                .iter()
                .map(|p| {
                    let href = p.url.rsplit('/').next().unwrap_or_default();
                    if early {
                        format!(
                            "<tr><td><a href=\"{href}\">{}</a></td></tr>\n",
                            escape(&p.title)
                        )
                    } else {
                        format!("<li><a href=\"{href}\">{}</a></li>\n", escape(&p.title))
                    }
                })
                .collect();
            let index = if early {
                format!("<html><body><table class=\"program\">\n{links}</table></body></html>\n")
            } else {
                format!(
                    "<html><body><div class=\"program\"><ul>\n{links}</ul></div></body></html>\n"
                )
            };
            corpus.store(
                &PageSnapshot::new(index_url, year, index, at)?,
                SnapshotKind::Index,
            )?;
            for p in pages {
                let body = if early {
                    render_early(p)
                } else {
                    render_modern(p)
                };
                corpus.store(
                    &PageSnapshot::new(p.url.clone(), year, body, at)?,
                    SnapshotKind::Page,
                )?;
            }
        }
        Ok(corpus)
    }
}

fn seeded_exclusions(year: u16) -> Vec<(&'static str, &'static str, FixtureOutcome)> {
    use ExclusionReason::*;
    // 49 characters: one short of the minimum.
    const SHORT: &str = "Brief note on practice with families in transit.!";
    const OVERVIEW: &str = "This symposium brings together four papers on workforce retention in public child welfare agencies.";
    const WORKSHOP: &str =
        "Hands-on training in reproducible data management for community-engaged research teams.";
    match year {
        2008 => vec![
            (
                "Oral Presentation",
                SHORT,
                FixtureOutcome::Excluded(ShortAbstract),
            ),
            (
                "Workshop",
                WORKSHOP,
                FixtureOutcome::Excluded(WorkshopOrKeynote),
            ),
        ],
        2015 => vec![
            (
                "Symposium Overview",
                OVERVIEW,
                FixtureOutcome::Excluded(SymposiumOverview),
            ),
            (
                "Poster Presentation",
                SHORT,
                FixtureOutcome::Excluded(ShortAbstract),
            ),
        ],
        _ => vec![
            (
                "Keynote",
                WORKSHOP,
                FixtureOutcome::Excluded(WorkshopOrKeynote),
            ),
            (
                "Symposium Overview",
                OVERVIEW,
                FixtureOutcome::Excluded(SymposiumOverview),
            ),
            ("Oral Presentation", "", FixtureOutcome::Flagged),
        ],
    }
}

fn author_block(id: usize, use_no: usize, early: bool) -> FixtureAuthor {
    let p = &PEOPLE[id];
    let spelling = p.spellings[use_no % p.spellings.len()];
    let institution = p.institutions[use_no % p.institutions.len()];
    // The early archive printed no degrees or positions.
    let mut parts = vec![spelling.to_string()];
    if !early {
        parts.extend(
            p.degrees
                .split(", ")
                .filter(|d| !d.is_empty())
                .map(str::to_string),
        );
        parts.push(p.position.to_string());
        parts.extend(p.department.map(str::to_string));
    }
    parts.push(institution.to_string());
    parts.push(p.location.to_string());
    FixtureAuthor {
        person: id,
        block: parts.join(", "),
        name_normalized: crate::normalize::normalize_name(spelling).normalized,
        category: if early {
            PositionCategory::Unknown
        } else {
            p.category
        },
        institution: p.institution.to_string(),
        country: p.country.to_string(),
    }
}

fn authors_html(p: &FixturePresentation, early: bool) -> String {
    p.authors
        .iter()
        .enumerate()
        .map(|(i, a)| {
            // The first author carries the presenter mark.
            let block = if i == 0 {
                a.block.replacen(',', "*,", 1)
            } else {
                a.block.clone()
            };
            if early {
                format!("<tr class=\"author\"><td>{}</td></tr>\n", escape(&block))
            } else {
                format!("  <div class=\"author\">{}</div>\n", escape(&block))
            }
        })
        .collect()
}

fn render_modern(p: &FixturePresentation) -> String {
    let abstract_div = match p.outcome {
        FixtureOutcome::Flagged => String::new(),
        _ => format!(
            "<div class=\"abstract\"><p>{}</p></div>\n",
            escape(&p.abstract_text)
        ),
    };
    format!(
        "<!DOCTYPE html>\n<html><head><title>{title}</title></head><body>\n<div class=\"session\"><span class=\"sessionTitle\">Session {year}</span><span class=\"sessionType\">{stype}</span></div>\n<h2 class=\"paperTitle\">{title}</h2>\n<div class=\"paperauthors\">\n{authors}</div>\n{abstract_div}</body></html>\n",
        title = escape(&p.title),
        year = p.year,
        stype = p.session_type,
        authors = authors_html(p, false),
    )
}

fn render_early(p: &FixturePresentation) -> String {
    let abstract_row = match p.outcome {
        FixtureOutcome::Flagged => String::new(),
        _ => format!(
            "<tr><td class=\"abstracttext\">{}</td></tr>\n",
            escape(&p.abstract_text)
        ),
    };
    format!(
        "<html><body>\n<table class=\"paper\">\n<tr><td class=\"sessioninfo\"><b>Session {year}</b></td><td class=\"sessiontype\">{stype}</td></tr>\n<tr><td class=\"papertitle\">{title}</td></tr>\n{authors}{abstract_row}</table>\n</body></html>\n",
        title = escape(&p.title),
        year = p.year,
        stype = p.session_type,
        authors = authors_html(p, true),
    )
}
