use serde::{Deserialize, Serialize};

use super::IngestError;

pub const FIRST_YEAR: u16 = 2005;
pub const LAST_YEAR: u16 = 2026;
/// Last year served with the early layout and URL scheme.
pub const LAST_EARLY_YEAR: u16 = 2008;

/// CSS selectors describing one archive layout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EraSelectors {
    /// Index page path relative to the archive root; `{year}` is substituted.
    pub index_path: String,
    /// Element that must exist on an index page.
    pub index_container: String,
    /// Links to presentation pages, inside the container.
    pub index_link: String,
    pub title: String,
    pub abstract_body: String,
    pub author: String,
    pub session_title: String,
    pub session_type: String,
}

impl EraSelectors {
    pub fn early() -> Self {
        Self {
            index_path: "{year}/techprogram/start.html".into(),
            index_container: "table.program".into(),
            index_link: "a[href*='abstract_']".into(),
            title: "td.papertitle".into(),
            abstract_body: "td.abstracttext".into(),
            author: "tr.author td".into(),
            session_title: "td.sessioninfo b".into(),
            session_type: "td.sessiontype".into(),
        }
    }

    pub fn modern() -> Self {
        Self {
            index_path: "{year}/webprogram/start.html".into(),
            index_container: "div.program".into(),
            index_link: "a[href*='Paper']".into(),
            title: "h2.paperTitle".into(),
            abstract_body: "div.abstract".into(),
            author: "div.paperauthors div.author".into(),
            session_title: "div.session .sessionTitle".into(),
            session_type: "div.session .sessionType".into(),
        }
    }

    pub fn index_path_for(&self, year: u16) -> String {
        self.index_path.replace("{year}", &year.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Era {
    Early,
    Modern,
}

/// A layout era together with its selectors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParserEra {
    pub era: Era,
    pub selectors: EraSelectors,
}

/// Selector sets for both eras; overridable from configuration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayoutConfig {
    pub early: EraSelectors,
    pub modern: EraSelectors,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        Self {
            early: EraSelectors::early(),
            modern: EraSelectors::modern(),
        }
    }
}

pub fn check_year(year: u16) -> Result<(), IngestError> {
    if (FIRST_YEAR..=LAST_YEAR).contains(&year) {
        Ok(())
    } else {
        Err(IngestError::UnsupportedYear(year))
    }
}

impl LayoutConfig {
    pub fn era_for(&self, year: u16) -> Result<ParserEra, IngestError> {
        check_year(year)?;
        Ok(if year <= LAST_EARLY_YEAR {
            ParserEra {
                era: Era::Early,
                selectors: self.early.clone(),
            }
        } else {
            ParserEra {
                era: Era::Modern,
                selectors: self.modern.clone(),
            }
        })
    }
}
