use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use super::MappingError;

const COUNTRIES_CSV: &str = include_str!("../../assets/mappings/countries.csv");
const US_STATES_CSV: &str = include_str!("../../assets/mappings/us_states.csv");
const CA_PROVINCES_CSV: &str = include_str!("../../assets/mappings/ca_provinces.csv");
const CITIES_CSV: &str = include_str!("../../assets/mappings/cities.csv");

pub const USA: &str = "USA";
pub const CANADA: &str = "Canada";

/// Country, state/province and city dictionaries.
#[derive(Debug, Clone)]
pub struct CountryMapping {
    countries: HashMap<String, String>,
    countries_loose: HashMap<String, String>,
    us_states: BTreeMap<String, String>,
    ca_provinces: BTreeMap<String, String>,
    /// lowercased abbreviation or full name -> (full name, country)
    regions: HashMap<String, (String, &'static str)>,
    cities: HashMap<String, String>,
}

fn key(s: &str) -> String {
    crate::util::collapse_whitespace(s).to_lowercase()
}

fn loose_key(s: &str) -> String {
    s.chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(char::to_lowercase)
        .collect()
}

fn read_pairs(name: &str, text: &str) -> Result<Vec<(String, String)>, MappingError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| MappingError::Csv {
            file: name.to_string(),
            message: e.to_string(),
        })?;
        match (row.get(0), row.get(1)) {
            (Some(a), Some(b)) if !a.is_empty() && !b.is_empty() => {
                out.push((a.to_string(), b.to_string()))
            }
            _ => {
                return Err(MappingError::Csv {
                    file: name.to_string(),
                    message: format!("expected two non-empty columns, got {row:?}"),
                })
            }
        }
    }
    Ok(out)
}

impl CountryMapping {
    pub fn from_csv(
        countries: &str,
        us_states: &str,
        ca_provinces: &str,
        cities: &str,
    ) -> Result<Self, MappingError> {
        let mut map = CountryMapping {
            countries: HashMap::new(),
            countries_loose: HashMap::new(),
            us_states: BTreeMap::new(),
            ca_provinces: BTreeMap::new(),
            regions: HashMap::new(),
            cities: HashMap::new(),
        };
        for (variant, canonical) in read_pairs("countries.csv", countries)? {
            map.insert_country(&variant, &canonical)?;
            map.insert_country(&canonical.clone(), &canonical)?;
        }
        for (abbr, name) in read_pairs("us_states.csv", us_states)? {
            map.regions.insert(key(&abbr), (name.clone(), USA));
            map.regions.insert(key(&name), (name.clone(), USA));
            map.us_states.insert(abbr.to_uppercase(), name);
        }
        for (abbr, name) in read_pairs("ca_provinces.csv", ca_provinces)? {
            map.regions.insert(key(&abbr), (name.clone(), CANADA));
            map.regions.insert(key(&name), (name.clone(), CANADA));
            map.ca_provinces.insert(abbr.to_uppercase(), name);
        }
        for (city, country) in read_pairs("cities.csv", cities)? {
            let canonical = map.country(&country).unwrap_or(country);
            map.cities.insert(key(&city), canonical);
        }
        Ok(map)
    }

    /// Load `countries.csv`, `us_states.csv`, `ca_provinces.csv` and
    /// (optionally) `cities.csv` from a directory.
    pub fn load(dir: &Path) -> Result<Self, MappingError> {
        let read = |name: &str| {
            std::fs::read_to_string(dir.join(name)).map_err(|source| MappingError::Io {
                path: dir.join(name),
                source,
            })
        };
        let cities = if dir.join("cities.csv").exists() {
            read("cities.csv")?
        } else {
            "city,country\n".to_string()
        };
        Self::from_csv(
            &read("countries.csv")?,
            &read("us_states.csv")?,
            &read("ca_provinces.csv")?,
            &cities,
        )
    }

    fn insert_country(&mut self, variant: &str, canonical: &str) -> Result<(), MappingError> {
        if let Some(prev) = self.countries.get(&key(variant)) {
            if prev != canonical {
                return Err(MappingError::DuplicateVariant {
                    variant: variant.to_string(),
                    first: prev.clone(),
                    second: canonical.to_string(),
                });
            }
        }
        self.countries.insert(key(variant), canonical.to_string());
        self.countries_loose
            .entry(loose_key(variant))
            .or_insert_with(|| canonical.to_string());
        Ok(())
    }

    /// Canonical English country name for a variant spelling.
    pub fn country(&self, variant: &str) -> Option<String> {
        self.countries
            .get(&key(variant))
            .or_else(|| self.countries_loose.get(&loose_key(variant)))
            .cloned()
    }

    /// Full state/province name and its country for an abbreviation or a
    /// full name. Abbreviations must be written in upper case ("MI", not
    /// "mi") so common words never read as states.
    pub fn region(&self, text: &str) -> Option<(&str, &'static str)> {
        let t = text.trim().trim_end_matches('.');
        if t.len() == 2 && !t.chars().all(|c| c.is_ascii_uppercase()) {
            return None;
        }
        self.regions
            .get(&key(t))
            .map(|(name, country)| (name.as_str(), *country))
    }

    pub fn city_country(&self, city: &str) -> Option<&str> {
        self.cities.get(&key(city)).map(String::as_str)
    }

    pub fn canonical_countries(&self) -> impl Iterator<Item = &str> {
        let mut v: Vec<&str> = self.countries.values().map(String::as_str).collect();
        v.sort_unstable();
        v.dedup();
        v.into_iter()
    }

    pub fn variant_count(&self) -> usize {
        self.countries.len()
    }

    pub fn us_states(&self) -> &BTreeMap<String, String> {
        &self.us_states
    }

    pub fn ca_provinces(&self) -> &BTreeMap<String, String> {
        &self.ca_provinces
    }
}

impl Default for CountryMapping {
    fn default() -> Self {
        Self::from_csv(COUNTRIES_CSV, US_STATES_CSV, CA_PROVINCES_CSV, CITIES_CSV)
            .expect("bundled geography tables are valid")
    }
}

fn nonempty(s: Option<&str>) -> Option<&str> {
    s.map(str::trim).filter(|s| !s.is_empty())
}

/// Resolve an author's country and expand the state abbreviation.
///
/// An explicit country wins and is mapped through the dictionary (an
/// explicit but unrecognized country is kept as written). Without one, a
/// recognized US state or Canadian province implies the country, then the
/// city table is tried.
pub fn normalize_country(
    country_raw: Option<&str>,
    state: Option<&str>,
    city: Option<&str>,
    mapping: &CountryMapping,
) -> (Option<String>, Option<String>) {
    let country_raw = nonempty(country_raw);
    let state = nonempty(state);
    let city = nonempty(city);

    let region = state.and_then(|s| mapping.region(s));
    let explicit = country_raw.map(|c| {
        mapping
            .country(c)
            .unwrap_or_else(|| crate::util::collapse_whitespace(c))
    });

    let state_full = match (region, &explicit) {
        // a US abbreviation next to an explicit foreign country is not a US state
        (Some((name, region_country)), Some(c)) if c == region_country => Some(name.to_string()),
        (Some(_), Some(_)) => state.map(str::to_string),
        (Some((name, _)), None) => Some(name.to_string()),
        (None, _) => state.map(str::to_string),
    };

    let country = explicit
        .or_else(|| region.map(|(_, c)| c.to_string()))
        .or_else(|| {
            city.and_then(|c| mapping.city_country(c))
                .map(str::to_string)
        });
    (country, state_full)
}
