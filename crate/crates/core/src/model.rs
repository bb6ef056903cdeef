//! Domain types shared across the crate: survey features, their typology,
//! and the dataset manifest that mints persistent record identifiers.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("lat out of range: {0}")]
    LatOutOfRange(f64),
    #[error("lon out of range: {0}")]
    LonOutOfRange(f64),
    #[error("unknown {kind} value {value:?}")]
    UnknownVariant { kind: &'static str, value: String },
    #[error("invalid id {0:?}")]
    InvalidId(String),
    #[error("invalid locus id {0:?}")]
    InvalidLocusId(String),
    #[error("locus id {locus} is not a prefix of id {id}")]
    LocusMismatch { id: String, locus: String },
    #[error("elevation must be a finite value >= 0, got {0}")]
    InvalidElevation(f64),
    #[error("not an absolute URL: {0:?}")]
    NotAbsoluteUrl(String),
    #[error("configuration error: {0}")]
    Config(String),
}

/// WGS84 position in decimal degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    lat: f64,
    lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self, ModelError> {
        if !(-90.0..=90.0).contains(&lat) {
            return Err(ModelError::LatOutOfRange(lat));
        }
        if !(-180.0..=180.0).contains(&lon) {
            return Err(ModelError::LonOutOfRange(lon));
        }
        Ok(GeoPoint { lat, lon })
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }
}

macro_rules! closed_enum {
    ($(#[$meta:meta])* $name:ident, $kind:literal, [$($variant:ident),+ $(,)?]) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(&self) -> &'static str {
                match self {
                    $($name::$variant => stringify!($variant)),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = ModelError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $(stringify!($variant) => Ok($name::$variant),)+
                    _ => Err(ModelError::UnknownVariant { kind: $kind, value: s.to_string() }),
                }
            }
        }
    };
}

closed_enum!(
    /// Funerary monument typology recorded by the survey.
    TombType,
    "tomb_type",
    [TempleTomb, Grabhaus, VaultedChamber, RockCut, LycianHouse, Pedestal, Altar, Larnax]
);

closed_enum!(
    SiteContext,
    "context",
    [Urban, Village, IsolatedNecropolis, Isolated]
);

closed_enum!(
    /// Three-way acculturation class: polis (high), mesogeia (medium),
    /// hinterland (weak).
    CulturalAffiliation,
    "affiliation",
    [Polis, Mesogeia, Hinterland]
);

impl TombType {
    /// Default affiliation when a record carries no explicit override.
    pub fn default_affiliation(self) -> CulturalAffiliation {
        match self {
            TombType::TempleTomb | TombType::Grabhaus | TombType::VaultedChamber => {
                CulturalAffiliation::Polis
            }
            TombType::RockCut | TombType::LycianHouse => CulturalAffiliation::Mesogeia,
            TombType::Pedestal | TombType::Altar | TombType::Larnax => {
                CulturalAffiliation::Hinterland
            }
        }
    }
}

/// One georeferenced funerary record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyFeature {
    pub id: String,
    pub locus_id: String,
    pub locus_name: String,
    pub tomb_type: TombType,
    pub context: SiteContext,
    pub location: GeoPoint,
    pub elevation_m: f64,
    pub has_inscription: bool,
    pub photo_urls: Vec<String>,
    pub affiliation: Option<CulturalAffiliation>,
    pub gazetteer_uri: Option<String>,
}

impl SurveyFeature {
    /// Checks every record invariant that does not depend on the rest of the
    /// dataset. `strict_ids` enforces the `RC####-suffix` grammar.
    pub fn validate(&self, strict_ids: bool) -> Result<(), ModelError> {
        if strict_ids {
            validate_strict_id(&self.id)?;
            validate_locus_id(&self.locus_id)?;
        } else if !is_relaxed_id(&self.id) {
            return Err(ModelError::InvalidId(self.id.clone()));
        }
        if !self.id.starts_with(&self.locus_id) {
            return Err(ModelError::LocusMismatch {
                id: self.id.clone(),
                locus: self.locus_id.clone(),
            });
        }
        if !self.elevation_m.is_finite() || self.elevation_m < 0.0 {
            return Err(ModelError::InvalidElevation(self.elevation_m));
        }
        for u in &self.photo_urls {
            check_absolute_url(u)?;
        }
        if let Some(u) = &self.gazetteer_uri {
            check_absolute_url(u)?;
        }
        Ok(())
    }

    pub fn has_photos(&self) -> bool {
        !self.photo_urls.is_empty()
    }
}

fn validate_locus_id(locus: &str) -> Result<(), ModelError> {
    let b = locus.as_bytes();
    if b.len() == 6 && locus.starts_with("RC") && b[2..].iter().all(u8::is_ascii_digit) {
        Ok(())
    } else {
        Err(ModelError::InvalidLocusId(locus.to_string()))
    }
}

fn validate_strict_id(id: &str) -> Result<(), ModelError> {
    let bad = || ModelError::InvalidId(id.to_string());
    if id.len() < 8 || !id.is_char_boundary(6) {
        return Err(bad());
    }
    validate_locus_id(&id[..6]).map_err(|_| bad())?;
    let rest = &id[6..];
    let suffix = rest.strip_prefix('-').ok_or_else(bad)?;
    if suffix.is_empty()
        || !suffix
            .bytes()
            .all(|c| c.is_ascii_alphanumeric() || c == b'_' || c == b'-')
    {
        return Err(bad());
    }
    Ok(())
}

fn is_relaxed_id(id: &str) -> bool {
    !id.is_empty()
        && id
            .bytes()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, b'-' | b'_' | b'.' | b'~'))
}

pub(crate) fn check_absolute_url(s: &str) -> Result<url::Url, ModelError> {
    match url::Url::parse(s) {
        Ok(u) if !u.cannot_be_a_base() => Ok(u),
        _ => Err(ModelError::NotAbsoluteUrl(s.to_string())),
    }
}

/// Affiliation of a feature: the explicit override when present, otherwise
/// the tomb-type default.
pub fn classify(feature: &SurveyFeature) -> CulturalAffiliation {
    feature
        .affiliation
        .unwrap_or_else(|| feature.tomb_type.default_affiliation())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub dataset_id: String,
    pub title: String,
    pub license_uri: String,
    pub schema_version: String,
    pub record_count: usize,
    pub base_uri: String,
}

impl DatasetManifest {
    /// Persistent identifier for a record id under this manifest.
    pub fn record_uri(&self, id: &str) -> Result<String, ModelError> {
        check_absolute_url(&self.base_uri)
            .map_err(|_| ModelError::Config(format!("base_uri {:?} is not absolute", self.base_uri)))?;
        Ok(format!("{}/records/{}", self.base_uri.trim_end_matches('/'), id))
    }
}

pub fn persistent_uri(
    manifest: &DatasetManifest,
    feature: &SurveyFeature,
) -> Result<String, ModelError> {
    manifest.record_uri(&feature.id)
}


#[cfg(test)]
mod tests {
    use super::test_support::*;
    use super::*;

    #[test]
    fn classify_defaults_and_override() {
        let f = feature("RC0304-T001", TombType::TempleTomb, 36.3, 32.35);
        assert_eq!(classify(&f), CulturalAffiliation::Polis);
        let f = feature("RC0304-T001", TombType::RockCut, 36.3, 32.35);
        assert_eq!(classify(&f), CulturalAffiliation::Mesogeia);
        let f = feature("RC0304-T001", TombType::Pedestal, 36.3, 32.35);
        assert_eq!(classify(&f), CulturalAffiliation::Hinterland);
        let mut f = feature("RC0304-T001", TombType::Larnax, 36.3, 32.35);
        f.affiliation = Some(CulturalAffiliation::Polis);
        assert_eq!(classify(&f), CulturalAffiliation::Polis);
    }

    #[test]
    fn rule_table_partitions_types() {
        let mut counts = [0usize; 3];
        for t in TombType::ALL {
            counts[t.default_affiliation() as usize] += 1;
        }
        assert_eq!(counts, [3, 2, 3]);
        assert_eq!(CulturalAffiliation::ALL.len(), 3);
    }

    #[test]
    fn persistent_uri_concatenates_and_normalizes() {
        let f = feature("RC0304-T001", TombType::RockCut, 36.3, 32.35);
        let m = manifest("https://example.org/rc");
        assert_eq!(
            persistent_uri(&m, &f).unwrap(),
            "https://example.org/rc/records/RC0304-T001"
        );
        let m = manifest("https://example.org/rc/");
        assert_eq!(
            persistent_uri(&m, &f).unwrap(),
            "https://example.org/rc/records/RC0304-T001"
        );
        let m = manifest("not a uri");
        assert!(matches!(persistent_uri(&m, &f), Err(ModelError::Config(_))));
    }

    #[test]
    fn id_grammar() {
        let mut f = feature("RC0304-T001", TombType::RockCut, 36.3, 32.35);
        assert!(f.validate(true).is_ok());
        f.id = "RC0304-T 01".into();
        assert!(f.validate(true).is_err());
        assert!(f.validate(false).is_err());
        f.id = "RC0304T001".into();
        assert!(f.validate(true).is_err());
        assert!(f.validate(false).is_ok());
        f.id = "RC1105-T001".into();
        assert!(matches!(f.validate(true), Err(ModelError::LocusMismatch { .. })));
    }

    #[test]
    fn geopoint_ranges() {
        assert!(GeoPoint::new(95.0, 0.0).is_err());
        assert!(GeoPoint::new(0.0, -180.5).is_err());
        assert!(GeoPoint::new(-90.0, 180.0).is_ok());
        assert!(GeoPoint::new(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn enum_strings_roundtrip() {
        for t in TombType::ALL {
            assert_eq!(t.as_str().parse::<TombType>().unwrap(), *t);
        }
        assert!("Mausoleum".parse::<TombType>().is_err());
    }
}
