//! Name folding, institution canonicalization, country/state resolution
//! and the position taxonomy.
//!
//! All functions here are pure over immutable tables; load the tables
//! once and share them freely across threads.

mod country;
mod institution;
mod name;
mod position;

use std::path::{Path, PathBuf};

pub use country::{normalize_country, CountryMapping, CANADA, USA};
pub use institution::{
    clean_institution, normalize_institution, InstitutionMapping, InstitutionTable,
    MIN_SUBSTRING_LEN,
};
pub use name::{normalize_name, NormalizedName};
pub use position::{
    classify_position, position_keyword_category, PositionCategory, POSITION_RULES,
};

pub(crate) use institution::has_institution_marker;

#[derive(Debug, thiserror::Error)]
pub enum MappingError {
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}: {message}")]
    Csv { file: String, message: String },
    #[error("variant `{variant}` is claimed by both `{first}` and `{second}`")]
    DuplicateVariant {
        variant: String,
        first: String,
        second: String,
    },
    #[error("bad institution pattern `{pattern}`: {message}")]
    Pattern { pattern: String, message: String },
}

/// All lookup tables used by normalization.
#[derive(Debug, Clone, Default)]
pub struct MappingTables {
    pub institutions: InstitutionTable,
    pub geography: CountryMapping,
}

impl MappingTables {
    /// Load tables from a `mappings/` directory laid out as
    /// `institutions.csv`, `countries.csv`, `us_states.csv`,
    /// `ca_provinces.csv` and optionally `cities.csv`.
    pub fn load(dir: &Path) -> Result<Self, MappingError> {
        Ok(Self {
            institutions: InstitutionTable::load(&dir.join("institutions.csv"))?,
            geography: CountryMapping::load(dir)?,
        })
    }
}

/// The bundled default mapping files, by file name.
pub fn bundled_mapping_files() -> [(&'static str, &'static str); 5] {
    [
        (
            "institutions.csv",
            include_str!("../../assets/mappings/institutions.csv"),
        ),
        (
            "countries.csv",
            include_str!("../../assets/mappings/countries.csv"),
        ),
        (
            "us_states.csv",
            include_str!("../../assets/mappings/us_states.csv"),
        ),
        (
            "ca_provinces.csv",
            include_str!("../../assets/mappings/ca_provinces.csv"),
        ),
        (
            "cities.csv",
            include_str!("../../assets/mappings/cities.csv"),
        ),
    ]
}
