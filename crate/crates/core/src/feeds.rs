//! Atom, KML and GeoJSON serializations of a result page.
//!
//! Numbers are written as shortest round-trip decimals without exponent
//! notation. Axis order differs per format: GeoJSON `[lon, lat]`, KML
//! `lon,lat,elevation`, GeoRSS `lat lon`.

use std::fmt::Write as _;
use std::io;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::Serialize;
use thiserror::Error;

use crate::facet::{FacetIndex, IndexedFeature, ResultPage};
use crate::model::{CulturalAffiliation, DatasetManifest, ModelError};

pub const ATOM_MEDIA_TYPE: &str = "application/atom+xml";
pub const KML_MEDIA_TYPE: &str = "application/vnd.google-earth.kml+xml";
pub const GEOJSON_MEDIA_TYPE: &str = "application/geo+json";

pub const ATOM_NS: &str = "http://www.w3.org/2005/Atom";
pub const GEORSS_NS: &str = "http://www.georss.org/georss";
pub const KML_NS: &str = "http://www.opengis.net/kml/2.2";
pub const OPENSEARCH_NS: &str = "http://a9.com/-/spec/opensearch/1.1/";

#[derive(Debug, Error)]
pub enum FeedError {
    #[error("record {0} not found in index")]
    UnresolvedId(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("self url {0:?} is not an absolute URL")]
    BadSelfUrl(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeedFormat {
    Atom,
    Kml,
    GeoJson,
}

impl FeedFormat {
    pub fn media_type(self) -> &'static str {
        match self {
            FeedFormat::Atom => ATOM_MEDIA_TYPE,
            FeedFormat::Kml => KML_MEDIA_TYPE,
            FeedFormat::GeoJson => GEOJSON_MEDIA_TYPE,
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "atom" => Some(FeedFormat::Atom),
            "kml" => Some(FeedFormat::Kml),
            "geojson" => Some(FeedFormat::GeoJson),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeedDocument {
    pub media_type: &'static str,
    pub body: Vec<u8>,
    pub record_uris: Vec<String>,
}

/// Shortest round-trip decimal, never in exponent form.
pub fn fmt_decimal(v: f64) -> String {
    format!("{v}")
}

/// `serde_json` formatter writing floats with [`fmt_decimal`].
struct DecimalFormatter;

impl serde_json::ser::Formatter for DecimalFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value}")
    }
}

pub fn to_json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, DecimalFormatter);
    value.serialize(&mut ser).expect("in-memory JSON serialization");
    out
}

pub fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn resolve<'a>(
    page: &ResultPage,
    manifest: &DatasetManifest,
    index: &'a FacetIndex,
) -> Result<Vec<(&'a IndexedFeature, String)>, FeedError> {
    page.matches
        .iter()
        .map(|id| {
            let doc = index.get(id).ok_or_else(|| FeedError::UnresolvedId(id.clone()))?;
            Ok((doc, manifest.record_uri(id)?))
        })
        .collect()
}

#[derive(Serialize)]
struct FeatureCollection<'a> {
    #[serde(rename = "type")]
    kind: &'static str,
    features: Vec<GeoFeature<'a>>,
}

#[derive(Serialize)]
struct GeoFeature<'a> {
    #[serde(rename = "type")]
    kind: &'static str,
    id: &'a str,
    geometry: PointGeometry,
    properties: Properties<'a>,
}

#[derive(Serialize)]
struct PointGeometry {
    #[serde(rename = "type")]
    kind: &'static str,
    coordinates: [f64; 2],
}

#[derive(Serialize)]
struct Properties<'a> {
    record_id: &'a str,
    locus_id: &'a str,
    locus_name: &'a str,
    tomb_type: &'static str,
    context: &'static str,
    elevation_m: f64,
    has_inscription: bool,
    photo_urls: &'a [String],
    affiliation: &'static str,
    affiliation_override: Option<&'static str>,
    gazetteer_uri: Option<&'a str>,
    source_uri: &'a str,
}

pub fn to_geojson(
    page: &ResultPage,
    manifest: &DatasetManifest,
    index: &FacetIndex,
) -> Result<FeedDocument, FeedError> {
    let resolved = resolve(page, manifest, index)?;
    let features = resolved
        .iter()
        .map(|(doc, uri)| {
            let f = &doc.feature;
            GeoFeature {
                kind: "Feature",
                id: uri,
                geometry: PointGeometry {
                    kind: "Point",
                    coordinates: [f.location.lon(), f.location.lat()],
                },
                properties: Properties {
                    record_id: &f.id,
                    locus_id: &f.locus_id,
                    locus_name: &f.locus_name,
                    tomb_type: f.tomb_type.as_str(),
                    context: f.context.as_str(),
                    elevation_m: f.elevation_m,
                    has_inscription: f.has_inscription,
                    photo_urls: &f.photo_urls,
                    affiliation: doc.affiliation.as_str(),
                    affiliation_override: f.affiliation.map(|a| a.as_str()),
                    gazetteer_uri: f.gazetteer_uri.as_deref(),
                    source_uri: uri,
                },
            }
        })
        .collect();
    let body = to_json_bytes(&FeatureCollection { kind: "FeatureCollection", features });
    Ok(FeedDocument {
        media_type: GEOJSON_MEDIA_TYPE,
        body,
        record_uris: resolved.into_iter().map(|(_, u)| u).collect(),
    })
}

/// KML colors are aabbggrr.
pub fn kml_color(a: CulturalAffiliation) -> &'static str {
    match a {
        CulturalAffiliation::Polis => "ffff0000",
        CulturalAffiliation::Mesogeia => "ff00a5ff",
        CulturalAffiliation::Hinterland => "ff0000ff",
    }
}

pub fn to_kml(
    page: &ResultPage,
    manifest: &DatasetManifest,
    index: &FacetIndex,
) -> Result<FeedDocument, FeedError> {
    let resolved = resolve(page, manifest, index)?;
    let mut x = String::new();
    x.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(x, "<kml xmlns=\"{KML_NS}\">");
    x.push_str("<Document>\n");
    let _ = writeln!(x, "<name>{}</name>", xml_escape(&manifest.title));
    for a in CulturalAffiliation::ALL {
        let _ = writeln!(
            x,
            "<Style id=\"{a}\"><IconStyle><color>{}</color></IconStyle></Style>",
            kml_color(*a)
        );
    }
    for (doc, uri) in &resolved {
        let f = &doc.feature;
        x.push_str("<Placemark>\n");
        let _ = writeln!(x, "<name>{}</name>", xml_escape(&f.id));
        let _ = writeln!(
            x,
            "<description>{}</description>",
            xml_escape(&format!("<a href=\"{uri}\">{uri}</a>"))
        );
        let _ = writeln!(x, "<styleUrl>#{}</styleUrl>", doc.affiliation);
        x.push_str("<ExtendedData>\n");
        let mut data = |name: &str, value: &str| {
            let _ = writeln!(
                x,
                "<Data name=\"{name}\"><value>{}</value></Data>",
                xml_escape(value)
            );
        };
        data("tomb_type", f.tomb_type.as_str());
        data("context", f.context.as_str());
        data("affiliation", doc.affiliation.as_str());
        data("has_inscription", if f.has_inscription { "true" } else { "false" });
        data("locus_name", &f.locus_name);
        data("locus_id", &f.locus_id);
        data("source_uri", uri);
        if !f.photo_urls.is_empty() {
            data("photo_urls", &f.photo_urls.join(" "));
        }
        if let Some(g) = &f.gazetteer_uri {
            data("gazetteer_uri", g);
        }
        x.push_str("</ExtendedData>\n");
        let _ = writeln!(
            x,
            "<Point><coordinates>{},{},{}</coordinates></Point>",
            fmt_decimal(f.location.lon()),
            fmt_decimal(f.location.lat()),
            fmt_decimal(f.elevation_m)
        );
        x.push_str("</Placemark>\n");
    }
    x.push_str("</Document>\n</kml>\n");
    Ok(FeedDocument {
        media_type: KML_MEDIA_TYPE,
        body: x.into_bytes(),
        record_uris: resolved.into_iter().map(|(_, u)| u).collect(),
    })
}

fn page_link(self_url: &url::Url, page: usize) -> String {
    let mut u = self_url.clone();
    let pairs: Vec<(String, String)> = self_url
        .query_pairs()
        .filter(|(k, _)| k != "page")
        .map(|(k, v)| (k.into_owned(), v.into_owned()))
        .collect();
    {
        let mut q = u.query_pairs_mut();
        q.clear();
        for (k, v) in &pairs {
            q.append_pair(k, v);
        }
        q.append_pair("page", &page.to_string());
    }
    u.to_string()
}

pub fn rfc3339(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Secs, true)
}

pub fn to_atom(
    page: &ResultPage,
    manifest: &DatasetManifest,
    index: &FacetIndex,
    self_url: &str,
    updated: &DateTime<Utc>,
) -> Result<FeedDocument, FeedError> {
    let resolved = resolve(page, manifest, index)?;
    let parsed = url::Url::parse(self_url)
        .ok()
        .filter(|u| !u.cannot_be_a_base())
        .ok_or_else(|| FeedError::BadSelfUrl(self_url.to_string()))?;
    let updated = rfc3339(updated);

    let mut x = String::new();
    x.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        x,
        "<feed xmlns=\"{ATOM_NS}\" xmlns:georss=\"{GEORSS_NS}\" xmlns:opensearch=\"{OPENSEARCH_NS}\">"
    );
    let _ = writeln!(x, "<id>{}</id>", xml_escape(self_url));
    let _ = writeln!(x, "<title>{}</title>", xml_escape(&manifest.title));
    let _ = writeln!(x, "<updated>{updated}</updated>");
    let _ = writeln!(x, "<author><name>{}</name></author>", xml_escape(&manifest.dataset_id));
    let _ = writeln!(x, "<rights>{}</rights>", xml_escape(&manifest.license_uri));
    let _ = writeln!(x, "<link rel=\"self\" href=\"{}\"/>", xml_escape(self_url));
    if page.has_next() {
        let _ = writeln!(
            x,
            "<link rel=\"next\" href=\"{}\"/>",
            xml_escape(&page_link(&parsed, page.page + 1))
        );
    }
    if page.has_previous() {
        let _ = writeln!(
            x,
            "<link rel=\"previous\" href=\"{}\"/>",
            xml_escape(&page_link(&parsed, page.page - 1))
        );
    }
    let _ = writeln!(x, "<opensearch:totalResults>{}</opensearch:totalResults>", page.total);
    let _ = writeln!(x, "<opensearch:itemsPerPage>{}</opensearch:itemsPerPage>", page.per_page);
    let _ = writeln!(
        x,
        "<opensearch:startIndex>{}</opensearch:startIndex>",
        (page.page - 1) * page.per_page + 1
    );
    for (doc, uri) in &resolved {
        let f = &doc.feature;
        let uri = xml_escape(uri);
        x.push_str("<entry>\n");
        let _ = writeln!(x, "<id>{uri}</id>");
        let _ = writeln!(x, "<title>{}</title>", xml_escape(&f.id));
        let _ = writeln!(x, "<updated>{updated}</updated>");
        let _ = writeln!(x, "<link rel=\"alternate\" href=\"{uri}\"/>");
        let _ = writeln!(
            x,
            "<summary>{}</summary>",
            xml_escape(&format!(
                "{} at {} ({}, {})",
                f.tomb_type, f.locus_name, f.context, doc.affiliation
            ))
        );
        let _ = writeln!(
            x,
            "<georss:point>{} {}</georss:point>",
            fmt_decimal(f.location.lat()),
            fmt_decimal(f.location.lon())
        );
        x.push_str("</entry>\n");
    }
    x.push_str("</feed>\n");
    Ok(FeedDocument {
        media_type: ATOM_MEDIA_TYPE,
        body: x.into_bytes(),
        record_uris: resolved.into_iter().map(|(_, u)| u).collect(),
    })
}
