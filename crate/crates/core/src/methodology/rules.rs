use std::path::Path;

use regex::Regex;
use serde::Deserialize;

use super::{
    check_abstract, Classification, ClassifyError, MethodologyClassifier, MethodologyLabel,
};
use crate::llm::Mode;

pub const BUNDLED_LEXICON: &str = include_str!("../../assets/lexicons/methodology_keywords.csv");

/// Indicator family a lexicon phrase contributes to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Quantitative,
    Qualitative,
    MixedMethods,
    Review,
    /// Explicit integration language ("integrating", "convergent").
    Integration,
}

#[derive(Debug, Clone, Deserialize)]
pub struct LexiconEntry {
    pub label: Family,
    pub phrase: String,
    pub weight: f64,
}

/// Weighted indicator phrases. A phrase prefixed with `re:` is a regular
/// expression; anything else matches as a whole-word phrase. Matching is
/// case-insensitive and each phrase counts once per abstract.
#[derive(Debug, Clone)]
pub struct Lexicon {
    entries: Vec<(LexiconEntry, Regex)>,
    digest: String,
}

impl Lexicon {
    pub fn from_csv(text: &str) -> Result<Self, ClassifyError> {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let mut entries = Vec::new();
        for (i, row) in reader.deserialize::<LexiconEntry>().enumerate() {
            let entry = row.map_err(|e| ClassifyError::Lexicon(format!("row {}: {e}", i + 2)))?;
            if !(entry.weight.is_finite() && entry.weight > 0.0) {
                return Err(ClassifyError::Lexicon(format!(
                    "row {}: weight must be positive",
                    i + 2
                )));
            }
            let pattern = match entry.phrase.strip_prefix("re:") {
                Some(re) => format!("(?i){re}"),
                None => format!(r"(?i)\b{}\b", regex::escape(entry.phrase.trim())),
            };
            let re = Regex::new(&pattern)
                .map_err(|e| ClassifyError::Lexicon(format!("row {}: {e}", i + 2)))?;
            entries.push((entry, re));
        }
        let digest = crate::util::sha256_hex(text.as_bytes())[..12].to_string();
        Ok(Self { entries, digest })
    }

    pub fn load(path: &Path) -> Result<Self, ClassifyError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ClassifyError::Lexicon(format!("{}: {e}", path.display())))?;
        Self::from_csv(&text)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Short content hash of the lexicon source.
    pub fn digest(&self) -> &str {
        &self.digest
    }

    pub fn score(&self, text: &str) -> FamilyScores {
        let mut s = FamilyScores::default();
        for (entry, re) in &self.entries {
            if re.is_match(text) {
                let slot = match entry.label {
                    Family::Quantitative => &mut s.quantitative,
                    Family::Qualitative => &mut s.qualitative,
                    Family::MixedMethods => &mut s.mixed,
                    Family::Review => &mut s.review,
                    Family::Integration => &mut s.integration,
                };
                *slot += entry.weight;
            }
        }
        s
    }
}

impl Default for Lexicon {
    fn default() -> Self {
        Self::from_csv(BUNDLED_LEXICON).expect("bundled lexicon is valid")
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FamilyScores {
    pub quantitative: f64,
    pub qualitative: f64,
    pub mixed: f64,
    pub review: f64,
    pub integration: f64,
}

/// Keyword-scoring classifier. Decision order: explicit review language,
/// then explicit mixed methods (or both empirical families present with
/// integration language), then the dominant empirical family, and
/// finally theoretical/other when nothing fired.
#[derive(Debug, Clone)]
pub struct RulesClassifier {
    lexicon: Lexicon,
    /// Review score needed to call an abstract a review.
    pub review_min: f64,
    /// Score each empirical family needs before integration language
    /// makes an abstract mixed methods.
    pub mixed_family_min: f64,
}

impl RulesClassifier {
    pub fn new(lexicon: Lexicon) -> Self {
        Self {
            lexicon,
            review_min: 2.0,
            mixed_family_min: 1.0,
        }
    }

    pub fn label_for(&self, s: &FamilyScores) -> MethodologyLabel {
        use MethodologyLabel::*;
        if s.review >= self.review_min {
            Review
        } else if s.mixed > 0.0
            || (s.quantitative >= self.mixed_family_min
                && s.qualitative >= self.mixed_family_min
                && s.integration > 0.0)
        {
            MixedMethods
        } else if s.quantitative > 0.0 && s.quantitative >= s.qualitative {
            Quantitative
        } else if s.qualitative > 0.0 {
            Qualitative
        } else {
            TheoreticalOther
        }
    }
}

impl Default for RulesClassifier {
    fn default() -> Self {
        Self::new(Lexicon::default())
    }
}

impl MethodologyClassifier for RulesClassifier {
    fn classify(&self, abstract_text: &str) -> Result<Classification, ClassifyError> {
        check_abstract(abstract_text)?;
        let scores = self.lexicon.score(abstract_text);
        Ok(Classification::Labeled(self.label_for(&scores)))
    }

    fn mode(&self) -> Mode {
        Mode::Rules
    }

    fn version(&self) -> String {
        format!("rules-{}", self.lexicon.digest())
    }
}
