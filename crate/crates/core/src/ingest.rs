//! Delimited-text ingest of survey features and gazetteer snapshots, plus
//! place-name reconciliation that assigns gazetteer URIs to loci.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{check_absolute_url, GeoPoint, ModelError, SurveyFeature};

pub const FEATURE_COLUMNS: [&str; 12] = [
    "id",
    "locus_id",
    "locus_name",
    "tomb_type",
    "context",
    "lat",
    "lon",
    "elevation_m",
    "has_inscription",
    "photo_urls",
    "affiliation",
    "gazetteer_uri",
];

const MANDATORY_FEATURE_COLUMNS: usize = 9;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("missing mandatory column {0:?}")]
    MissingColumn(String),
    #[error("malformed delimited text: {0}")]
    Csv(#[from] csv::Error),
    #[error("gazetteer line {line}: {reason}")]
    GazetteerRow { line: u64, reason: String },
    #[error("duplicate gazetteer uri {uri} on lines {first} and {second}")]
    DuplicateUri { uri: String, first: u64, second: u64 },
}

#[derive(Debug, Clone, Copy)]
pub struct IngestOptions {
    /// Enforce the `RC####-suffix` id grammar. When false any URL-safe id is
    /// accepted as long as the locus id is its prefix.
    pub strict_ids: bool,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions { strict_ids: true }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub accepted: usize,
    pub rejected: Vec<Rejection>,
    pub reconciled: usize,
    pub unmatched: usize,
    /// (locus_name, candidate URIs) for names matching more than one entry.
    pub ambiguous: Vec<(String, Vec<String>)>,
}

impl IngestReport {
    pub fn total_rows(&self) -> usize {
        self.accepted + self.rejected.len()
    }

    pub fn absorb(&mut self, delta: ReconcileReport) {
        self.reconciled += delta.reconciled;
        self.unmatched += delta.unmatched;
        self.ambiguous.extend(delta.ambiguous);
    }
}

fn column_map<'a>(
    headers: &csv::StringRecord,
    wanted: &[&'a str],
    mandatory: usize,
) -> Result<HashMap<&'a str, usize>, IngestError> {
    let mut map = HashMap::new();
    for (i, name) in wanted.iter().enumerate() {
        match headers.iter().position(|h| h.trim() == *name) {
            Some(pos) => {
                map.insert(*name, pos);
            }
            None if i < mandatory => return Err(IngestError::MissingColumn(name.to_string())),
            None => {}
        }
    }
    Ok(map)
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" => Some(true),
        "false" | "0" | "no" => Some(false),
        _ => None,
    }
}

fn parse_f64(name: &str, s: &str) -> Result<f64, String> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| format!("{name} is not a number: {s:?}"))
}

fn optional(s: &str) -> Option<&str> {
    let s = s.trim();
    (!s.is_empty()).then_some(s)
}

fn feature_from_row(
    row: &csv::StringRecord,
    cols: &HashMap<&str, usize>,
    options: &IngestOptions,
) -> Result<SurveyFeature, String> {
    let cell = |name: &str| -> &str {
        cols.get(name)
            .and_then(|&i| row.get(i))
            .map(str::trim)
            .unwrap_or("")
    };
    let model = |e: ModelError| e.to_string();

    let lat = parse_f64("lat", cell("lat"))?;
    let lon = parse_f64("lon", cell("lon"))?;
    let location = GeoPoint::new(lat, lon).map_err(model)?;
    let has_inscription = parse_bool(cell("has_inscription"))
        .ok_or_else(|| format!("has_inscription is not a boolean: {:?}", cell("has_inscription")))?;
    let photo_urls = cell("photo_urls")
        .split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect();

    let feature = SurveyFeature {
        id: cell("id").to_string(),
        locus_id: cell("locus_id").to_string(),
        locus_name: cell("locus_name").to_string(),
        tomb_type: cell("tomb_type").parse().map_err(model)?,
        context: cell("context").parse().map_err(model)?,
        location,
        elevation_m: parse_f64("elevation_m", cell("elevation_m"))?,
        has_inscription,
        photo_urls,
        affiliation: optional(cell("affiliation"))
            .map(str::parse)
            .transpose()
            .map_err(model)?,
        gazetteer_uri: optional(cell("gazetteer_uri")).map(String::from),
    };
    if feature.locus_name.is_empty() {
        return Err("locus_name is empty".into());
    }
    feature.validate(options.strict_ids).map_err(model)?;
    Ok(feature)
}

/// Parses a feature table. Bad rows are reported and skipped; structural
/// problems (missing columns, broken quoting) fail the whole file.
pub fn parse_dataset<R: Read>(
    source: R,
    options: &IngestOptions,
) -> Result<(Vec<SurveyFeature>, IngestReport), IngestError> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(source);
    let cols = column_map(reader.headers()?, &FEATURE_COLUMNS, MANDATORY_FEATURE_COLUMNS)?;

    let mut features = Vec::new();
    let mut report = IngestReport::default();
    let mut seen = HashSet::new();
    let mut row = csv::StringRecord::new();
    loop {
        let line = reader.position().line();
        match reader.read_record(&mut row) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) if matches!(e.kind(), csv::ErrorKind::Utf8 { .. }) => {
                report.rejected.push(Rejection { line, reason: e.to_string() });
                continue;
            }
            Err(e) => return Err(e.into()),
        }
        let line = row.position().map(|p| p.line()).unwrap_or(line);
        match feature_from_row(&row, &cols, options) {
            Ok(f) if !seen.insert(f.id.clone()) => report.rejected.push(Rejection {
                line,
                reason: format!("duplicate id {}", f.id),
            }),
            Ok(f) => features.push(f),
            Err(reason) => report.rejected.push(Rejection { line, reason }),
        }
    }
    report.accepted = features.len();
    Ok((features, report))
}

/// Writes features in the normalized column order read by `parse_dataset`.
pub fn write_dataset<W: Write>(features: &[SurveyFeature], out: W) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(FEATURE_COLUMNS)?;
    for f in features {
        w.write_record([
            f.id.as_str(),
            &f.locus_id,
            &f.locus_name,
            f.tomb_type.as_str(),
            f.context.as_str(),
            &f.location.lat().to_string(),
            &f.location.lon().to_string(),
            &f.elevation_m.to_string(),
            if f.has_inscription { "true" } else { "false" },
            &f.photo_urls.join(";"),
            f.affiliation.map(|a| a.as_str()).unwrap_or(""),
            f.gazetteer_uri.as_deref().unwrap_or(""),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GazetteerEntry {
    pub uri: String,
    pub preferred_name: String,
    pub aliases: Vec<String>,
    pub location: GeoPoint,
}

pub fn load_gazetteer<R: Read>(source: R) -> Result<Vec<GazetteerEntry>, IngestError> {
    const COLS: [&str; 5] = ["uri", "preferred_name", "aliases", "lat", "lon"];
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(source);
    let cols = column_map(reader.headers()?, &COLS, COLS.len())?;

    let mut entries = Vec::new();
    let mut first_line: HashMap<String, u64> = HashMap::new();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let cell = |name: &str| row.get(cols[name]).map(str::trim).unwrap_or("");
        let bad = |reason: String| IngestError::GazetteerRow { line, reason };

        let uri = cell("uri").to_string();
        check_absolute_url(&uri).map_err(|e| bad(e.to_string()))?;
        if let Some(&first) = first_line.get(&uri) {
            return Err(IngestError::DuplicateUri { uri, first, second: line });
        }
        let preferred_name = cell("preferred_name").to_string();
        if preferred_name.is_empty() {
            return Err(bad("preferred_name is empty".into()));
        }
        let lat = parse_f64("lat", cell("lat")).map_err(bad)?;
        let lon = parse_f64("lon", cell("lon")).map_err(bad)?;
        let location = GeoPoint::new(lat, lon).map_err(|e| bad(e.to_string()))?;
        let aliases = cell("aliases")
            .split(';')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(String::from)
            .collect();
        first_line.insert(uri.clone(), line);
        entries.push(GazetteerEntry { uri, preferred_name, aliases, location });
    }
    Ok(entries)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReconcileReport {
    pub reconciled: usize,
    pub unmatched: usize,
    pub ambiguous: Vec<(String, Vec<String>)>,
}

/// Fills `gazetteer_uri` for features that lack one by exact
/// case-insensitive name match: preferred names first, aliases only when no
/// preferred name matches. Multiple candidates leave the field empty and are
/// listed as ambiguous.
pub fn reconcile_places(
    mut features: Vec<SurveyFeature>,
    gazetteer: &[GazetteerEntry],
) -> (Vec<SurveyFeature>, ReconcileReport) {
    let mut by_preferred: HashMap<String, Vec<&str>> = HashMap::new();
    let mut by_alias: HashMap<String, Vec<&str>> = HashMap::new();
    for e in gazetteer {
        by_preferred
            .entry(e.preferred_name.to_lowercase())
            .or_default()
            .push(&e.uri);
        for a in &e.aliases {
            let list = by_alias.entry(a.to_lowercase()).or_default();
            if !list.contains(&e.uri.as_str()) {
                list.push(&e.uri);
            }
        }
    }

    let mut report = ReconcileReport::default();
    let mut ambiguous: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for f in features.iter_mut().filter(|f| f.gazetteer_uri.is_none()) {
        let key = f.locus_name.to_lowercase();
        let candidates = by_preferred
            .get(&key)
            .or_else(|| by_alias.get(&key))
            .map(Vec::as_slice)
            .unwrap_or(&[]);
        match candidates {
            [] => report.unmatched += 1,
            [uri] => {
                f.gazetteer_uri = Some(uri.to_string());
                report.reconciled += 1;
            }
            many => {
                ambiguous
                    .entry(f.locus_name.clone())
                    .or_insert_with(|| many.iter().map(|s| s.to_string()).collect());
            }
        }
    }
    report.ambiguous = ambiguous.into_iter().collect();
    (features, report)
}
