use std::collections::HashMap;
use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::country::CountryMapping;
use super::position::position_keyword_category;
use super::MappingError;

const INSTITUTIONS_CSV: &str = include_str!("../../assets/mappings/institutions.csv");

/// Variants shorter than this only match exactly, never by containment.
pub const MIN_SUBSTRING_LEN: usize = 5;

/// One canonical institution with its known spellings.
///
/// Variant cells prefixed with `re:` in the CSV are regular expressions
/// (matched case-insensitively against the cleaned string) and land in
/// `patterns`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstitutionMapping {
    pub canonical: String,
    pub variants: Vec<String>,
    pub patterns: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct InstitutionTable {
    entries: Vec<InstitutionMapping>,
    exact: HashMap<String, usize>,
    /// (lowercased variant, entry index), longest first
    by_length: Vec<(String, usize)>,
    patterns: Vec<(Regex, usize)>,
}

fn key(s: &str) -> String {
    crate::util::collapse_whitespace(s).to_lowercase()
}

impl InstitutionTable {
    pub fn empty() -> Self {
        Self::new(Vec::new()).expect("empty table is valid")
    }

    pub fn new(mut entries: Vec<InstitutionMapping>) -> Result<Self, MappingError> {
        let mut exact: HashMap<String, usize> = HashMap::new();
        let mut owners: HashMap<String, String> = HashMap::new();
        let mut patterns = Vec::new();
        for (idx, entry) in entries.iter_mut().enumerate() {
            if !entry
                .variants
                .iter()
                .any(|v| key(v) == key(&entry.canonical))
            {
                entry.variants.insert(0, entry.canonical.clone());
            }
            for v in &entry.variants {
                if let Some(first) = owners.get(&key(v)) {
                    if *first != entry.canonical {
                        return Err(MappingError::DuplicateVariant {
                            variant: v.clone(),
                            first: first.clone(),
                            second: entry.canonical.clone(),
                        });
                    }
                }
                owners.insert(key(v), entry.canonical.clone());
                exact.insert(key(v), idx);
            }
            for p in &entry.patterns {
                let re = Regex::new(&format!("(?i){p}")).map_err(|e| MappingError::Pattern {
                    pattern: p.clone(),
                    message: e.to_string(),
                })?;
                patterns.push((re, idx));
            }
        }
        let mut by_length: Vec<(String, usize)> =
            exact.iter().map(|(k, &i)| (k.clone(), i)).collect();
        by_length.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));
        Ok(Self {
            entries,
            exact,
            by_length,
            patterns,
        })
    }

    pub fn from_csv(text: &str) -> Result<Self, MappingError> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut order: Vec<String> = Vec::new();
        let mut grouped: HashMap<String, InstitutionMapping> = HashMap::new();
        for row in rdr.records() {
            let row = row.map_err(|e| MappingError::Csv {
                file: "institutions.csv".into(),
                message: e.to_string(),
            })?;
            let (Some(canonical), Some(variant)) = (row.get(0), row.get(1)) else {
                return Err(MappingError::Csv {
                    file: "institutions.csv".into(),
                    message: format!("expected canonical,variant; got {row:?}"),
                });
            };
            let entry = grouped.entry(canonical.to_string()).or_insert_with(|| {
                order.push(canonical.to_string());
                InstitutionMapping {
                    canonical: canonical.to_string(),
                    variants: Vec::new(),
                    patterns: Vec::new(),
                }
            });
            match variant.strip_prefix("re:") {
                Some(p) => entry.patterns.push(p.to_string()),
                None => entry.variants.push(variant.to_string()),
            }
        }
        let entries = order
            .into_iter()
            .map(|c| grouped.remove(&c).expect("grouped"))
            .collect();
        Self::new(entries)
    }

    pub fn load(path: &Path) -> Result<Self, MappingError> {
        let text = std::fs::read_to_string(path).map_err(|source| MappingError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_csv(&text)
    }

    pub fn entries(&self) -> &[InstitutionMapping] {
        &self.entries
    }

    fn exact_match(&self, cleaned: &str) -> Option<&str> {
        self.exact
            .get(&key(cleaned))
            .map(|&i| self.entries[i].canonical.as_str())
    }

    fn substring_match(&self, cleaned: &str) -> Option<&str> {
        let k = key(cleaned);
        self.by_length
            .iter()
            .filter(|(v, _)| v.len() >= MIN_SUBSTRING_LEN)
            .find(|(v, _)| {
                k.contains(v.as_str()) || (k.len() >= MIN_SUBSTRING_LEN && v.contains(&k))
            })
            .map(|&(_, i)| self.entries[i].canonical.as_str())
    }

    fn pattern_match(&self, cleaned: &str) -> Option<&str> {
        for candidate in rewrites(cleaned) {
            if let Some(c) = self
                .exact_match(&candidate)
                .or_else(|| self.substring_match(&candidate))
            {
                return Some(c);
            }
        }
        self.patterns
            .iter()
            .find(|(re, _)| re.is_match(cleaned))
            .map(|&(_, i)| self.entries[i].canonical.as_str())
    }
}

impl Default for InstitutionTable {
    fn default() -> Self {
        Self::from_csv(INSTITUTIONS_CSV).expect("bundled institution table is valid")
    }
}

static CAMPUS_SUFFIX: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(.+?)\s*(?:-|–|—|\bat\b|/)\s*[^-–—/]+$").unwrap());
static UNIV_ABBREV: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\b(univ\.?|u\.)\s*(of\b)?").unwrap());

/// Spelling rewrites tried in the pattern stage.
fn rewrites(cleaned: &str) -> Vec<String> {
    let mut out = Vec::new();
    if let Some(c) = CAMPUS_SUFFIX.captures(cleaned) {
        out.push(c[1].trim().to_string());
    }
    let no_article = cleaned
        .strip_prefix("The ")
        .or_else(|| cleaned.strip_prefix("the "))
        .unwrap_or(cleaned);
    let expanded = UNIV_ABBREV
        .replace_all(no_article, |c: &regex::Captures| {
            if c.get(2).is_some() {
                "University of ".to_string()
            } else {
                "University ".to_string()
            }
        })
        .replace('&', "and");
    let expanded = crate::util::collapse_whitespace(&expanded);
    if expanded != cleaned {
        out.push(expanded);
    }
    out
}

/// Strip embedded position titles and geographic tails from an
/// institution string.
pub fn clean_institution(raw: &str, geo: &CountryMapping) -> String {
    static AT_PREFIX: LazyLock<Regex> =
        LazyLock::new(|| Regex::new(r"(?i)^(.+?)\s+at\s+(.+)$").unwrap());

    let segments: Vec<String> = raw
        .split([',', ';'])
        .map(crate::util::collapse_whitespace)
        .filter(|s| !s.is_empty())
        .map(|s| match AT_PREFIX.captures(&s) {
            Some(c) if position_keyword_category(&c[1]).is_some() => c[2].to_string(),
            _ => s,
        })
        .collect();

    let is_geo = |s: &str| geo.region(s).is_some() || geo.country(s).is_some();
    let mut keep = vec![true; segments.len()];
    for (i, seg) in segments.iter().enumerate() {
        if position_keyword_category(seg).is_some() || (i > 0 && is_geo(seg)) {
            keep[i] = false;
        }
    }
    // city immediately before a dropped state/country tail
    for i in 1..segments.len() {
        if !keep[i]
            && is_geo(&segments[i])
            && i >= 2
            && keep[i - 1]
            && !has_institution_marker(&segments[i - 1])
        {
            keep[i - 1] = false;
        }
    }
    let kept: Vec<&str> = segments
        .iter()
        .zip(&keep)
        .filter(|(_, k)| **k)
        .map(|(s, _)| s.as_str())
        .collect();
    if kept.is_empty() {
        return crate::util::collapse_whitespace(raw);
    }
    kept.join(", ")
}

pub(crate) fn has_institution_marker(s: &str) -> bool {
    static MARKER: LazyLock<Regex> = LazyLock::new(|| {
        Regex::new(r"(?i)\b(universit(y|é|at|ad)|college|institute|school|hospital|center|centre|department|dept|faculty|foundation|agency|council|association|services|clinic|u\.)")
            .unwrap()
    });
    MARKER.is_match(s)
}

/// Canonicalize an institution string.
///
/// Returns the canonical name and `true` on a table hit; otherwise the
/// cleaned string and `false`. Matching is case-insensitive: exact variant
/// lookup, then containment (longest variant wins), then spelling
/// rewrites and per-institution patterns.
pub fn normalize_institution(
    raw: &str,
    table: &InstitutionTable,
    geo: &CountryMapping,
) -> (String, bool) {
    let cleaned = clean_institution(raw, geo);
    if let Some(c) = table.exact_match(&cleaned) {
        return (c.to_string(), true);
    }
    if let Some(c) = table.exact_match(raw.trim()) {
        return (c.to_string(), true);
    }
    if let Some(c) = table.substring_match(&cleaned) {
        return (c.to_string(), true);
    }
    if let Some(c) = table.pattern_match(&cleaned) {
        return (c.to_string(), true);
    }
    (cleaned, false)
}
