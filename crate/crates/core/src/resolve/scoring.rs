use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::name_parts::{parse_name, NameParts};
use super::similarity::{match_form, token_sort_ratio};
use super::ResolveError;
use crate::normalize::PositionCategory;

/// Threshold, score modifiers and the restricted-surname list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoringPolicy {
    pub threshold: i32,
    pub middle_initial_match_bonus: i32,
    pub middle_initial_conflict_penalty: i32,
    pub shared_institution_bonus: i32,
    pub career_regression_penalty: i32,
    /// Surnames that require an exact given-name match.
    pub restricted_surnames: Vec<String>,
}

impl Default for ScoringPolicy {
    fn default() -> Self {
        Self {
            threshold: 90,
            middle_initial_match_bonus: 4,
            middle_initial_conflict_penalty: 10,
            shared_institution_bonus: 4,
            career_regression_penalty: 10,
            restricted_surnames: ["Lee", "Kim", "Park", "Chen", "Wang", "Liu", "Zhang"]
                .map(String::from)
                .to_vec(),
        }
    }
}

impl ScoringPolicy {
    pub fn is_restricted(&self, last: &str) -> bool {
        let last = match_form(last);
        self.restricted_surnames
            .iter()
            .any(|s| match_form(s) == last)
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// One distinct normalized name, the unit that gets clustered.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NameVariant {
    pub key: String,
    pub parts: NameParts,
}

impl NameVariant {
    pub fn new(normalized: &str) -> Result<Self, ResolveError> {
        let key = crate::util::collapse_whitespace(normalized);
        Ok(Self {
            parts: parse_name(&key)?,
            key,
        })
    }
}

/// Per-variant evidence beyond the name itself.
#[derive(Debug, Clone, Default)]
pub struct MatchContext {
    pub institutions: HashMap<String, BTreeSet<String>>,
    pub positions_by_year: HashMap<String, BTreeMap<u16, PositionCategory>>,
}

impl MatchContext {
    pub fn add_institution(&mut self, variant: &str, institution: &str) {
        self.institutions
            .entry(variant.to_string())
            .or_default()
            .insert(institution.to_string());
    }

    /// Record a position held in `year`. When a variant reports several
    /// positions in one year the highest-ranked one is kept.
    pub fn add_position(&mut self, variant: &str, year: u16, position: PositionCategory) {
        let slot = self
            .positions_by_year
            .entry(variant.to_string())
            .or_default()
            .entry(year)
            .or_insert(position);
        if position.career_rank() > slot.career_rank() {
            *slot = position;
        }
    }

    pub fn shares_institution(&self, a: &str, b: &str) -> bool {
        match (self.institutions.get(a), self.institutions.get(b)) {
            (Some(x), Some(y)) => !x.is_disjoint(y),
            _ => false,
        }
    }

    /// True when, across the two variants, a later year carries a strictly
    /// lower career rank than an earlier one.
    pub fn career_regresses(&self, a: &str, b: &str) -> bool {
        let (Some(pa), Some(pb)) = (self.positions_by_year.get(a), self.positions_by_year.get(b))
        else {
            return false;
        };
        let regress = |early: &BTreeMap<u16, PositionCategory>,
                       late: &BTreeMap<u16, PositionCategory>| {
            early.iter().any(|(ye, pe)| {
                late.range(ye + 1..)
                    .any(|(_, pl)| match (pe.career_rank(), pl.career_rank()) {
                        (Some(re), Some(rl)) => rl < re,
                        _ => false,
                    })
            })
        };
        regress(pa, pb) || regress(pb, pa)
    }
}

fn exact_given_names(a: &NameParts, b: &NameParts) -> bool {
    let fa = match_form(&a.first);
    let fb = match_form(&b.first);
    fa.chars().count() > 1 && fa == fb
}

/// Final pair score in `[0, 100]`.
///
/// Base similarity is the token-sort ratio of the two match forms; then
/// middle-initial agreement (skipped for restricted surnames), a shared
/// canonical institution and career regression adjust it. For restricted
/// surnames without an exact, non-initial given-name match the score is
/// capped one below the threshold.
pub fn score_pair(
    a: &NameVariant,
    b: &NameVariant,
    ctx: &MatchContext,
    policy: &ScoringPolicy,
) -> i32 {
    if a.key == b.key {
        return 100;
    }
    let mut score = i32::from(token_sort_ratio(&match_form(&a.key), &match_form(&b.key)));
    let restricted = policy.is_restricted(&a.parts.last) || policy.is_restricted(&b.parts.last);

    if !restricted {
        match (a.parts.middle_initial, b.parts.middle_initial) {
            (Some(x), Some(y)) if x == y => score += policy.middle_initial_match_bonus,
            (Some(_), Some(_)) => score -= policy.middle_initial_conflict_penalty,
            _ => {}
        }
    }
    if ctx.shares_institution(&a.key, &b.key) {
        score += policy.shared_institution_bonus;
    }
    if ctx.career_regresses(&a.key, &b.key) {
        score -= policy.career_regression_penalty;
    }
    score = score.clamp(0, 100);

    if restricted && !exact_given_names(&a.parts, &b.parts) {
        score = score.min(policy.threshold - 1).max(0);
    }
    score
}
