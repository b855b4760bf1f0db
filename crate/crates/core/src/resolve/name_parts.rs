use serde::{Deserialize, Serialize};

use super::ResolveError;

/// Structured components of a personal name.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NameParts {
    /// Given name as written ("Michael", "M.", or empty for mononyms).
    pub first: String,
    pub last: String,
    pub middle_initial: Option<char>,
    pub suffix: Option<String>,
}

const SUFFIXES: &[&str] = &["jr", "sr", "ii", "iii", "iv", "v"];
const PARTICLES: &[&str] = &[
    "van", "von", "der", "den", "de", "del", "della", "di", "da", "du", "la", "le", "dos", "das",
    "st", "bin", "ibn", "al", "el", "ter", "ten",
];

fn is_suffix(token: &str) -> bool {
    let t = token
        .trim_matches(|c: char| c == '.' || c == ',')
        .to_lowercase();
    SUFFIXES.contains(&t.as_str())
}

fn is_particle(token: &str) -> bool {
    token.chars().all(|c| !c.is_uppercase())
        && PARTICLES.contains(&token.trim_end_matches('.').to_lowercase().as_str())
}

fn initial_of(token: &str) -> Option<char> {
    token
        .chars()
        .find(|c| c.is_alphabetic())
        .map(|c| c.to_uppercase().next().unwrap_or(c))
}

/// Split a normalized name into first / middle initial / last / suffix.
///
/// Accepts both "First M. Last" and "Last, First M." orders; a
/// single-token name is treated as a surname.
pub fn parse_name(normalized: &str) -> Result<NameParts, ResolveError> {
    let text = crate::util::collapse_whitespace(normalized);
    if text.is_empty() {
        return Err(ResolveError::EmptyName);
    }

    let mut suffix = None;
    let mut pieces: Vec<&str> = text
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .collect();
    while pieces.len() > 1 && is_suffix(pieces[pieces.len() - 1]) {
        suffix = Some(pieces.pop().unwrap().trim_end_matches('.').to_string());
    }

    let (given, mut family): (Vec<&str>, Vec<&str>) = if pieces.len() >= 2 {
        // Last, First Middle
        let given: Vec<&str> = pieces[1..]
            .iter()
            .flat_map(|p| p.split_whitespace())
            .collect();
        (given, pieces[0].split_whitespace().collect())
    } else {
        let mut tokens: Vec<&str> = pieces
            .first()
            .copied()
            .unwrap_or("")
            .split_whitespace()
            .collect();
        while tokens.len() > 1 && is_suffix(tokens[tokens.len() - 1]) {
            suffix = Some(tokens.pop().unwrap().trim_end_matches('.').to_string());
        }
        if tokens.len() == 1 {
            (Vec::new(), tokens)
        } else {
            let mut split = tokens.len() - 1;
            while split > 1 && is_particle(tokens[split - 1]) {
                split -= 1;
            }
            (tokens[..split].to_vec(), tokens[split..].to_vec())
        }
    };

    let mut given = given;
    if let Some(pos) = given.iter().position(|t| is_suffix(t)) {
        if pos > 0 && suffix.is_none() && pos == given.len() - 1 {
            suffix = Some(given.remove(pos).trim_end_matches('.').to_string());
        }
    }
    if family.is_empty() {
        family = std::mem::take(&mut given);
    }

    Ok(NameParts {
        first: given.first().map(|s| s.to_string()).unwrap_or_default(),
        last: family.join(" "),
        middle_initial: given.get(1).and_then(|t| initial_of(t)),
        suffix,
    })
}

/// Blocking key `first_initial|last`, lowercased; `_` stands in for a
/// missing given name.
pub fn block_key(parts: &NameParts) -> String {
    let initial = parts
        .first
        .chars()
        .find(|c| c.is_alphanumeric())
        .map(|c| c.to_lowercase().collect::<String>())
        .unwrap_or_else(|| "_".to_string());
    format!("{initial}|{}", parts.last.to_lowercase())
}
