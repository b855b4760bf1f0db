use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

/// Academic position taxonomy for author records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PositionCategory {
    DoctoralStudent,
    AssistantProfessor,
    AssociateProfessor,
    FullProfessor,
    ClinicalProfessor,
    Postdoctoral,
    SeniorLeadershipAcademic,
    SeniorLeadershipPractice,
    ResearchStaff,
    ResearchFaculty,
    Instructor,
    AdjunctFaculty,
    MastersStudent,
    UndergraduateStudent,
    Practitioner,
    Unknown,
}

impl PositionCategory {
    pub const ALL: [PositionCategory; 16] = [
        Self::DoctoralStudent,
        Self::AssistantProfessor,
        Self::AssociateProfessor,
        Self::FullProfessor,
        Self::ClinicalProfessor,
        Self::Postdoctoral,
        Self::SeniorLeadershipAcademic,
        Self::SeniorLeadershipPractice,
        Self::ResearchStaff,
        Self::ResearchFaculty,
        Self::Instructor,
        Self::AdjunctFaculty,
        Self::MastersStudent,
        Self::UndergraduateStudent,
        Self::Practitioner,
        Self::Unknown,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::DoctoralStudent => "DoctoralStudent",
            Self::AssistantProfessor => "AssistantProfessor",
            Self::AssociateProfessor => "AssociateProfessor",
            Self::FullProfessor => "FullProfessor",
            Self::ClinicalProfessor => "ClinicalProfessor",
            Self::Postdoctoral => "Postdoctoral",
            Self::SeniorLeadershipAcademic => "SeniorLeadershipAcademic",
            Self::SeniorLeadershipPractice => "SeniorLeadershipPractice",
            Self::ResearchStaff => "ResearchStaff",
            Self::ResearchFaculty => "ResearchFaculty",
            Self::Instructor => "Instructor",
            Self::AdjunctFaculty => "AdjunctFaculty",
            Self::MastersStudent => "MastersStudent",
            Self::UndergraduateStudent => "UndergraduateStudent",
            Self::Practitioner => "Practitioner",
            Self::Unknown => "Unknown",
        }
    }

    /// Display name as used in report tables.
    pub fn label(self) -> &'static str {
        match self {
            Self::DoctoralStudent => "Doctoral Student",
            Self::AssistantProfessor => "Assistant Professor",
            Self::AssociateProfessor => "Associate Professor",
            Self::FullProfessor => "Full Professor",
            Self::ClinicalProfessor => "Clinical Professor",
            Self::Postdoctoral => "Postdoctoral",
            Self::SeniorLeadershipAcademic => "Senior Leadership Academic",
            Self::SeniorLeadershipPractice => "Senior Leadership Practice",
            Self::ResearchStaff => "Research Staff",
            Self::ResearchFaculty => "Research Faculty",
            Self::Instructor => "Instructor",
            Self::AdjunctFaculty => "Adjunct Faculty",
            Self::MastersStudent => "Masters Student",
            Self::UndergraduateStudent => "Undergraduate Student",
            Self::Practitioner => "Practitioner",
            Self::Unknown => "Unknown",
        }
    }

    /// Rank on the academic career ladder, `None` for categories that carry
    /// no ordering (leadership, staff, practitioners, ...).
    pub fn career_rank(self) -> Option<u8> {
        match self {
            Self::UndergraduateStudent => Some(0),
            Self::MastersStudent => Some(1),
            Self::DoctoralStudent => Some(2),
            Self::Postdoctoral => Some(3),
            Self::AssistantProfessor => Some(4),
            Self::AssociateProfessor => Some(5),
            Self::FullProfessor => Some(6),
            _ => None,
        }
    }
}

impl fmt::Display for PositionCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PositionCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .iter()
            .copied()
            .find(|c| c.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown position category `{s}`"))
    }
}

/// Indicator patterns, scanned top to bottom; the first hit wins.
///
/// Compound titles sit above the bare words they contain so that, e.g.,
/// "research associate professor" never lands on AssociateProfessor and
/// "adjunct assistant professor" never lands on AssistantProfessor.
pub const POSITION_RULES: &[(PositionCategory, &[&str])] = {
    use PositionCategory::*;
    &[
        (
            DoctoralStudent,
            &[
                r"doctoral (student|candidate)",
                r"ph\.? ?d\.? (student|candidate)",
                r"\babd\b",
            ],
        ),
        (
            ResearchFaculty,
            &[r"research (assistant |associate )?professor"],
        ),
        (
            ClinicalProfessor,
            &[
                r"clinical (assistant |associate |full )?professor",
                r"professor of (the )?practice",
                r"teaching (assistant |associate )?professor",
            ],
        ),
        (AdjunctFaculty, &[r"\badjunct\b"]),
        (
            Postdoctoral,
            &[r"post-?doc", r"post-doctoral", r"postdoctoral"],
        ),
        (AssistantProfessor, &[r"assistant professor"]),
        (AssociateProfessor, &[r"associate professor"]),
        (FullProfessor, &[r"\bprofessor\b"]),
        (
            SeniorLeadershipAcademic,
            &[
                r"\b(associate |assistant |vice )?dean\b",
                r"\b(department |program )?chair(person)?\b",
                r"\bprovost\b",
                r"\bhead of (the )?(department|school)\b",
            ],
        ),
        (
            SeniorLeadershipPractice,
            &[
                r"\bexecutive director\b",
                r"\bprogram director\b",
                r"\bdirector\b",
                r"\b(agency )?administrator\b",
                r"\bchief\b",
                r"\bceo\b",
                r"\b(vice )?president\b",
                r"\bcommissioner\b",
            ],
        ),
        (
            ResearchStaff,
            &[
                r"research associate",
                r"research scientist",
                r"project coordinator",
                r"research assistant",
                r"research coordinator",
                r"research analyst",
                r"research specialist",
                r"project manager",
                r"\bscientist\b",
            ],
        ),
        (Instructor, &[r"\blecturer\b", r"\binstructor\b"]),
        (
            MastersStudent,
            &[
                r"\bmsw (student|candidate)",
                r"master'?s (degree )?student",
                r"\bmasters? student",
                r"\bgraduate student",
            ],
        ),
        (
            UndergraduateStudent,
            &[r"\bbsw student", r"\bundergraduate", r"\bbachelor'?s\b"],
        ),
    ]
};

static COMPILED: LazyLock<Vec<(PositionCategory, Vec<Regex>)>> = LazyLock::new(|| {
    POSITION_RULES
        .iter()
        .map(|(cat, pats)| {
            let res = pats
                .iter()
                .map(|p| Regex::new(&format!("(?i){p}")).expect("position pattern"))
                .collect();
            (*cat, res)
        })
        .collect()
});

const UNPARSEABLE: &[&str] = &["n/a", "na", "none", "unknown", "-", "--", "null", "tbd"];

/// First category whose indicator matches, if any.
pub fn position_keyword_category(text: &str) -> Option<PositionCategory> {
    COMPILED
        .iter()
        .find(|(_, res)| res.iter().any(|re| re.is_match(text)))
        .map(|(cat, _)| *cat)
}

/// Map an extracted position field onto the taxonomy. Total.
pub fn classify_position(position_raw: Option<&str>) -> PositionCategory {
    let Some(text) = position_raw.map(str::trim).filter(|t| !t.is_empty()) else {
        return PositionCategory::Unknown;
    };
    if !text.chars().any(char::is_alphanumeric)
        || UNPARSEABLE.iter().any(|u| u.eq_ignore_ascii_case(text))
    {
        return PositionCategory::Unknown;
    }
    position_keyword_category(text).unwrap_or(PositionCategory::Practitioner)
}
