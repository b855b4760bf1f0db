use std::sync::LazyLock;

use regex::Regex;

use super::{AffiliationExtractor, ExtractError, Extraction, ParsedAffiliation};
use crate::llm::Mode;
use crate::normalize::{has_institution_marker, position_keyword_category, CountryMapping};
use crate::util::collapse_whitespace;

/// Degree and license abbreviations, compared with dots and hyphens removed.
const DEGREES: &[&str] = &[
    "BA", "BS", "BSC", "BSN", "BSW", "DPH", "DRPH", "DSW", "EDD", "EDM", "JD", "LCPC", "LCSW",
    "LCSWC", "LCSWR", "LICSW", "LISW", "LISWS", "LMFT", "LMSW", "LPC", "LSW", "MA", "MBA", "MDIV",
    "MD", "MED", "MFT", "MHS", "MPA", "MPH", "MPP", "MS", "MSC", "MSN", "MSPH", "MSS", "MSSW",
    "MSW", "PHD", "PSYD", "RN", "SCD",
];

pub fn is_degree(token: &str) -> bool {
    let key: String = token
        .chars()
        .filter(|c| !matches!(c, '.' | '-' | '(' | ')'))
        .flat_map(char::to_uppercase)
        .collect();
    !key.is_empty() && DEGREES.contains(&key.as_str())
}

/// Degree tokens of a segment when the whole segment is degrees.
fn degree_tokens(seg: &str) -> Option<Vec<&str>> {
    let tokens: Vec<&str> = seg
        .split(|c: char| c.is_whitespace() || c == '/' || c == '&')
        .filter(|t| !t.is_empty())
        .collect();
    (!tokens.is_empty() && tokens.iter().all(|t| is_degree(t))).then_some(tokens)
}

static TITLE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?i)^(?:[\w'’.-]+\s+){0,3}?(professor|lecturer|instructor|dean|director|chair|chairperson|coordinator|manager|student|candidate|fellow|postdoc\w*|scientist|associate|assistant|researcher|analyst|specialist|consultant|president|officer|ceo|administrator|supervisor|therapist|clinician|social worker|counselor|practitioner|scholar|investigator|emerit\w*|head|founder|principal|trainee|intern|evaluator|advocate)\b",
    )
    .unwrap()
});

static DEPARTMENT: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?i)^(?:the\s+)?(?:graduate\s+)?(school|department|dept\.?|college|faculty|division|program|programme|center|centre|institute|unit|office)\s+(of|for|in|on)\b",
    )
    .unwrap()
});

fn is_position(seg: &str) -> bool {
    if DEPARTMENT.is_match(seg) {
        return false;
    }
    TITLE.is_match(seg)
        || (position_keyword_category(seg).is_some() && !has_institution_marker(seg))
}

/// Deterministic extractor: comma/semicolon segmentation plus keyword
/// dictionaries. Every value it returns is a substring of the
/// whitespace-normalized input.
#[derive(Debug, Clone, Default)]
pub struct RulesExtractor {
    geo: CountryMapping,
}

#[derive(Default)]
struct Geo {
    city: Option<String>,
    state: Option<String>,
    country: Option<String>,
}

impl RulesExtractor {
    pub fn new(geo: CountryMapping) -> Self {
        Self { geo }
    }

    fn is_country(&self, seg: &str) -> bool {
        self.geo.country(seg).is_some()
    }

    fn is_region(&self, seg: &str) -> bool {
        self.geo.region(seg).is_some()
    }

    fn city_like(&self, seg: &str) -> bool {
        let words = seg.split_whitespace().count();
        (1..=4).contains(&words)
            && seg.chars().next().is_some_and(char::is_uppercase)
            && !seg.chars().any(|c| c.is_ascii_digit())
            && !has_institution_marker(seg)
            && !is_position(seg)
            && degree_tokens(seg).is_none()
            && !self.is_country(seg)
    }

    /// Consume geographic segments from the end. Returns the index where
    /// the geographic tail starts.
    fn geo_tail(&self, segs: &[String], geo: &mut Geo) -> usize {
        let mut start = segs.len();
        for i in (1..segs.len()).rev() {
            let seg = segs[i].as_str();
            let nothing_yet = geo.city.is_none() && geo.state.is_none() && geo.country.is_none();
            if nothing_yet && self.is_country(seg) && !self.is_region(seg) {
                geo.country = Some(seg.to_string());
            } else if geo.state.is_none() && geo.city.is_none() && self.is_region(seg) {
                // "MA", "MS", "MD" double as degrees; only a city in front
                // makes them states.
                if degree_tokens(seg).is_some() && !(i >= 2 && self.city_like(&segs[i - 1])) {
                    break;
                }
                geo.state = Some(seg.to_string());
            } else if nothing_yet {
                match self.split_city_state(seg) {
                    Some((city, state)) => {
                        geo.city = Some(city.to_string());
                        geo.state = Some(state.to_string());
                        start = i;
                        break;
                    }
                    None if i == segs.len() - 1 && self.geo.city_country(seg).is_some() => {
                        geo.city = Some(seg.to_string());
                        start = i;
                        break;
                    }
                    None => break,
                }
            } else if geo.city.is_none() && self.city_like(seg) {
                geo.city = Some(seg.to_string());
                start = i;
                break;
            } else {
                break;
            }
            start = i;
        }
        start
    }

    /// "Ann Arbor MI" written without the comma.
    fn split_city_state<'a>(&self, seg: &'a str) -> Option<(&'a str, &'a str)> {
        let (city, state) = seg.rsplit_once(' ')?;
        let upper2 = state.len() == 2 && state.chars().all(|c| c.is_ascii_uppercase());
        (upper2 && self.is_region(state) && self.city_like(city)).then_some((city, state))
    }

    pub fn parse(&self, raw: &str) -> Result<ParsedAffiliation, ExtractError> {
        let segs: Vec<String> = raw
            .split([',', ';'])
            .map(collapse_whitespace)
            .filter(|s| !s.is_empty())
            .collect();
        let first = segs.first().ok_or(ExtractError::EmptyInput)?;

        let mut out = ParsedAffiliation::default();
        let mut name_tokens: Vec<&str> = first.split_whitespace().collect();
        while name_tokens.len() > 1 && is_degree(name_tokens[name_tokens.len() - 1]) {
            let d = name_tokens.pop().unwrap();
            out.degrees.insert(0, d.to_string());
        }
        out.name = name_tokens.join(" ").trim_matches(['*', ' ']).to_string();
        if out.name.is_empty() {
            return Err(ExtractError::EmptyInput);
        }

        let mut geo = Geo::default();
        let tail = self.geo_tail(&segs, &mut geo);

        let mut others = Vec::new();
        for seg in &segs[1..tail] {
            if let Some(tokens) = degree_tokens(seg) {
                out.degrees.extend(tokens.into_iter().map(str::to_string));
            } else if DEPARTMENT.is_match(seg) && !seg.to_lowercase().contains("universit") {
                out.department.get_or_insert_with(|| seg.clone());
            } else if is_position(seg) {
                out.position.get_or_insert_with(|| seg.clone());
            } else if has_institution_marker(seg) {
                out.institution.get_or_insert_with(|| seg.clone());
            } else {
                others.push(seg.clone());
            }
        }
        if out.institution.is_none() {
            out.institution = others.into_iter().next();
        }
        out.city = geo.city;
        out.state = geo.state;
        out.country = geo.country;
        Ok(out)
    }
}

impl AffiliationExtractor for RulesExtractor {
    fn extract(&self, raw: &str) -> Result<Extraction, ExtractError> {
        self.parse(raw).map(Extraction::Parsed)
    }

    fn mode(&self) -> Mode {
        Mode::Rules
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(raw: &str) -> ParsedAffiliation {
        RulesExtractor::default().parse(raw).unwrap()
    }

    fn s(v: &str) -> Option<String> {
        Some(v.to_string())
    }

    #[test]
    fn full_affiliation_string() {
        let p = parse("Matthew Smith, Professor, School of Social Work, University of Michigan, Ann Arbor, MI");
        assert_eq!(
            p,
            ParsedAffiliation {
                name: "Matthew Smith".into(),
                degrees: vec![],
                position: s("Professor"),
                institution: s("University of Michigan"),
                department: s("School of Social Work"),
                city: s("Ann Arbor"),
                state: s("MI"),
                country: None,
            }
        );
    }

    #[test]
    fn terse_affiliation_string() {
        let p = parse("M. Smith, U. Michigan");
        assert_eq!(p.name, "M. Smith");
        assert_eq!(p.institution, s("U. Michigan"));
        assert_eq!(
            (p.position, p.department, p.city, p.state, p.country),
            (None, None, None, None, None)
        );
    }

    #[test]
    fn degrees_and_country() {
        let p = parse("Ji-Won Park*, PhD, MSW, Assistant Professor, Seoul National University, Seoul, Republic of Korea");
        assert_eq!(p.name, "Ji-Won Park");
        assert_eq!(p.degrees, vec!["PhD", "MSW"]);
        assert_eq!(p.position, s("Assistant Professor"));
        assert_eq!(p.institution, s("Seoul National University"));
        assert_eq!(p.city, s("Seoul"));
        assert_eq!(p.country, s("Republic of Korea"));
    }

    #[test]
    fn degrees_attached_to_name() {
        let p = parse("Jane Doe PhD LCSW, Columbia University");
        assert_eq!(p.name, "Jane Doe");
        assert_eq!(p.degrees, vec!["PhD", "LCSW"]);
    }

    #[test]
    fn state_abbreviation_that_is_also_a_degree() {
        let p = parse("Ann Lee, MA, Lecturer, Boston College, Chestnut Hill, MA");
        assert_eq!(p.degrees, vec!["MA"]);
        assert_eq!(p.city, s("Chestnut Hill"));
        assert_eq!(p.state, s("MA"));
        let p = parse("Ann Lee, MA");
        assert_eq!(p.degrees, vec!["MA"]);
        assert_eq!(p.state, None);
    }

    #[test]
    fn city_state_province_country() {
        let p = parse("Wei Chen, Doctoral Student, University of Toronto, Toronto, ON, Canada");
        assert_eq!(p.city, s("Toronto"));
        assert_eq!(p.state, s("ON"));
        assert_eq!(p.country, s("Canada"));
        assert_eq!(p.position, s("Doctoral Student"));

        let p = parse("R. Hayes, Director, Smallville Family Services, Columbus OH");
        assert_eq!(p.position, s("Director"));
        assert_eq!(p.institution, s("Smallville Family Services"));
        assert_eq!((p.city, p.state), (s("Columbus"), s("OH")));
    }

    #[test]
    fn first_listed_institution_wins() {
        let p = parse("A. Author, Boston University, Harvard University");
        assert_eq!(p.institution, s("Boston University"));
    }

    #[test]
    fn empty_input() {
        assert!(matches!(
            RulesExtractor::default().parse(""),
            Err(ExtractError::EmptyInput)
        ));
        assert!(matches!(
            RulesExtractor::default().parse(" ,; "),
            Err(ExtractError::EmptyInput)
        ));
    }
}
