//! Shared fixtures and oracles for the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use geopub::diffusion::BarrierPolygon;
use geopub::facet::{BBox, FilterSet};
use geopub::ingest::write_dataset;
use geopub::{classify, CulturalAffiliation, DatasetManifest, GeoPoint, SiteContext, SurveyFeature, TombType};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const BASE_URI: &str = "https://data.example.org/rc";
pub const SERVICE_URL: &str = "https://data.example.org";
pub const CANONICAL_URL: &str = "https://visiblepast.example.org/articles/rc-funerary";
pub const FIXTURE_SEED: u64 = 0x5eed_0231;
pub const FIXTURE_COUNT: usize = 231;
pub const LOCUS_COUNT: usize = 26;

pub const WEST: f64 = 32.20;
pub const EAST: f64 = 32.45;
pub const NORTH: f64 = 36.34;
const KM_PER_DEG_LAT: f64 = 111.195;

/// Latitude of the synthetic coastline, a gentle wave along the south edge.
pub fn coast_lat(lon: f64) -> f64 {
    36.205 + 0.004 * ((lon - WEST) / (EAST - WEST) * 3.0 * std::f64::consts::PI).sin()
}

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn fixture_path(name: &str) -> PathBuf {
    fixtures_dir().join(name)
}

pub fn manifest() -> DatasetManifest {
    DatasetManifest {
        dataset_id: "rc-funerary".into(),
        title: "Rough Cilicia funerary features (synthetic)".into(),
        license_uri: "https://creativecommons.org/licenses/by/4.0/".into(),
        schema_version: "1".into(),
        record_count: FIXTURE_COUNT,
        base_uri: BASE_URI.into(),
    }
}

#[derive(Clone, Copy)]
pub struct Locus {
    pub id: &'static str,
    pub name: &'static str,
    pub band: CulturalAffiliation,
    pub context: SiteContext,
}

const fn locus(id: &'static str, name: &'static str, band: CulturalAffiliation, context: SiteContext) -> Locus {
    Locus { id, name, band, context }
}

use CulturalAffiliation::{Hinterland, Mesogeia, Polis};
use SiteContext::{Isolated, IsolatedNecropolis, Urban, Village};

pub const LOCI: [Locus; LOCUS_COUNT] = [
    locus("RC0101", "Selinus", Polis, Urban),
    locus("RC0102", "Nephelion", Polis, Village),
    locus("RC0201", "Iotape", Polis, Urban),
    locus("RC0202", "Bicki Burnu", Polis, Village),
    locus("RC0401", "Kestros", Polis, Urban),
    locus("RC0402", "Asar Tepe", Polis, Village),
    locus("RC0501", "Antioch", Polis, Urban),
    locus("RC0502", "Yenikoy Iskele", Polis, Village),
    locus("RC0601", "Kaladran", Polis, Village),
    locus("RC0304", "Kenetepe", Mesogeia, IsolatedNecropolis),
    locus("RC1105", "Corus", Mesogeia, IsolatedNecropolis),
    locus("RC0701", "Lamos", Mesogeia, Village),
    locus("RC0702", "Direvli", Mesogeia, Village),
    locus("RC0801", "Delice", Mesogeia, Village),
    locus("RC0802", "Gocuk Dag", Mesogeia, IsolatedNecropolis),
    locus("RC0901", "Karatepe", Mesogeia, Village),
    locus("RC0902", "Cimdere", Mesogeia, Village),
    locus("RC1001", "Kocatepe", Mesogeia, IsolatedNecropolis),
    locus("RC1201", "Kurtkulagi", Hinterland, Isolated),
    locus("RC1202", "Toslak", Hinterland, Isolated),
    locus("RC1301", "Emirsah", Hinterland, Village),
    locus("RC1302", "Guney", Hinterland, Isolated),
    locus("RC1401", "Asagi Kuzyaka", Hinterland, Isolated),
    locus("RC1402", "Tapan Dag", Hinterland, Isolated),
    locus("RC1501", "Kaledran Yayla", Hinterland, Village),
    locus("RC1502", "Bozyazi Yayla", Hinterland, Isolated),
];

fn band_types(band: CulturalAffiliation) -> &'static [TombType] {
    match band {
        Polis => &[TombType::TempleTomb, TombType::Grabhaus, TombType::VaultedChamber],
        Mesogeia => &[TombType::RockCut, TombType::LycianHouse],
        Hinterland => &[TombType::Pedestal, TombType::Altar, TombType::Larnax],
    }
}

/// Distance inland (km) of a band's loci.
fn band_depth(band: CulturalAffiliation) -> (f64, f64) {
    match band {
        Polis => (0.9, 3.2),
        Mesogeia => (5.2, 8.6),
        Hinterland => (10.6, 13.4),
    }
}

/// Locus centres as (lat, lon), spread west to east within each band.
pub fn locus_centres() -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(FIXTURE_SEED);
    let mut out = Vec::new();
    for band in CulturalAffiliation::ALL {
        let members: Vec<_> = LOCI.iter().filter(|l| l.band == *band).collect();
        let n = members.len() as f64;
        let (lo, hi) = band_depth(*band);
        for (i, _) in members.iter().enumerate() {
            let lon = 32.225 + (i as f64 + 0.5) * 0.2 / n + rng.gen_range(-0.004..0.004);
            let depth = rng.gen_range(lo..hi);
            out.push((coast_lat(lon) + depth / KM_PER_DEG_LAT, lon));
        }
    }
    out
}

/// The 231-feature synthetic survey: 26 loci whose tomb types follow the
/// coastal, midland and hinterland bands, with a few cross-band tombs at
/// the midland necropolis clusters and one recorded override.
pub fn fixture_features() -> Vec<SurveyFeature> {
    let centres = locus_centres();
    let mut rng = ChaCha8Rng::seed_from_u64(FIXTURE_SEED ^ 0xfeed);
    let ordered: Vec<&Locus> = CulturalAffiliation::ALL
        .iter()
        .flat_map(|b| LOCI.iter().filter(move |l| l.band == *b))
        .collect();
    let mut features = Vec::with_capacity(FIXTURE_COUNT);
    for (k, (l, &(clat, clon))) in ordered.iter().zip(&centres).enumerate() {
        let count = if k < FIXTURE_COUNT - 8 * LOCUS_COUNT { 9 } else { 8 };
        let depth_km = (clat - coast_lat(clon)) * KM_PER_DEG_LAT;
        for t in 0..count {
            let cross_band = matches!(l.name, "Kenetepe" | "Corus") && t >= count - 2;
            let tomb_type = if cross_band {
                *[TombType::Altar, TombType::Larnax].choose(&mut rng).unwrap()
            } else {
                *band_types(l.band).choose(&mut rng).unwrap()
            };
            let lat = round6(clat + rng.gen_range(-0.0025..0.0025));
            let lon = round6(clon + rng.gen_range(-0.0030..0.0030));
            let inscription_odds = if tomb_type == TombType::RockCut { 0.5 } else { 0.2 };
            let id = format!("{}-T{:03}", l.id, t + 1);
            let photos = (0..[0, 0, 1, 2][rng.gen_range(0..4)])
                .map(|p| format!("https://images.example.org/rc/{id}-{}.jpg", p + 1))
                .collect();
            let override_affiliation = (l.name == "Selinus" && t == 0).then_some(Polis);
            let tomb_type = if override_affiliation.is_some() { TombType::RockCut } else { tomb_type };
            features.push(SurveyFeature {
                id,
                locus_id: l.id.to_string(),
                locus_name: l.name.to_string(),
                tomb_type,
                context: l.context,
                location: GeoPoint::new(lat, lon).unwrap(),
                elevation_m: (25.0 + depth_km * 85.0 + rng.gen_range(-20.0..20.0)).round(),
                has_inscription: rng.gen_bool(inscription_odds),
                photo_urls: photos,
                affiliation: override_affiliation,
                gazetteer_uri: None,
            });
        }
    }
    features
}

fn round6(v: f64) -> f64 {
    (v * 1e6).round() / 1e6
}

pub fn features_csv() -> String {
    let mut out = Vec::new();
    write_dataset(&fixture_features(), &mut out).unwrap();
    String::from_utf8(out).unwrap()
}

/// Local gazetteer snapshot: most loci match a preferred name, Kenetepe only
/// through an alias, Corus twice (ambiguous), and three loci not at all.
pub fn gazetteer_csv() -> String {
    let centres = locus_centres();
    let ordered: Vec<&Locus> = CulturalAffiliation::ALL
        .iter()
        .flat_map(|b| LOCI.iter().filter(move |l| l.band == *b))
        .collect();
    let mut rows = vec!["uri,preferred_name,aliases,lat,lon".to_string()];
    let mut n = 640_100;
    for (l, &(lat, lon)) in ordered.iter().zip(&centres) {
        n += 7;
        let (lat, lon) = ((lat * 1e4).round() / 1e4, (lon * 1e4).round() / 1e4);
        let uri = format!("https://gazetteer.example.org/places/{n}");
        match l.name {
            "Toslak" | "Guney" | "Bozyazi Yayla" => {}
            "Kenetepe" => rows.push(format!("{uri},Kenetepe Necropolis,Kenetepe;Kene Tepe,{lat},{lon}")),
            "Corus" => {
                rows.push(format!("{uri},Corus,,{lat},{lon}"));
                rows.push(format!("https://gazetteer.example.org/places/{},Corus,Korus Kalesi,{lat},{lon}", n + 1));
            }
            "Antioch" => rows.push(format!("{uri},Antioch,Antiochia ad Cragum;Antiocheia,{lat},{lon}")),
            name => rows.push(format!("{uri},{name},,{lat},{lon}")),
        }
    }
    rows.join("\n") + "\n"
}

pub fn barrier_ring() -> Vec<(f64, f64)> {
    let mut ring: Vec<(f64, f64)> = (0..=20)
        .map(|i| {
            let lon = WEST + (EAST - WEST) * i as f64 / 20.0;
            (lon, (coast_lat(lon) * 1e6).round() / 1e6)
        })
        .collect();
    ring.push((EAST, NORTH));
    ring.push((WEST, NORTH));
    ring.push(ring[0]);
    ring
}

pub fn barrier() -> BarrierPolygon {
    BarrierPolygon::new(
        barrier_ring()
            .into_iter()
            .map(|(lon, lat)| GeoPoint::new(lat, lon).unwrap())
            .collect(),
    )
    .unwrap()
}

pub fn barrier_geojson() -> String {
    let coords: Vec<String> = barrier_ring().iter().map(|(lon, lat)| format!("[{lon},{lat}]")).collect();
    format!(
        "{{\"type\":\"Feature\",\"properties\":{{\"name\":\"survey sector\"}},\"geometry\":{{\"type\":\"Polygon\",\"coordinates\":[[{}]]}}}}\n",
        coords.join(",")
    )
}

pub fn article_text() -> String {
    format!(
        "title: Funerary monuments of western Rough Cilicia
article_id: rc-funerary
authors: Survey Team; Data Editor
canonical_url: {CANONICAL_URL}

# Coast and midlands

Tomb designs borrowed from the Greco-Roman mainstream cluster near the sea.

::: minimap affiliation=Polis
Coastal tombs of Polis affiliation
:::

Rock-cut and Lycian house tombs dominate the midland villages.

::: minimap tomb_type=RockCut,LycianHouse&context=IsolatedNecropolis
Rock-cut and house tombs at isolated necropoleis
:::

# All features

::: mastermap
:::
"
    )
}

/// Every fixture file and its generated content.
pub fn fixture_files() -> Vec<(&'static str, String)> {
    vec![
        ("features.csv", features_csv()),
        ("gazetteer.csv", gazetteer_csv()),
        ("barrier.geojson", barrier_geojson()),
        ("article.txt", article_text()),
    ]
}

// Oracles.

/// Linear-scan query: ids (ascending) of features satisfying every filter,
/// evaluated field by field without the index.
pub fn scan(features: &[SurveyFeature], f: &FilterSet) -> Vec<String> {
    let mut ids: Vec<String> = features
        .iter()
        .filter(|x| {
            let a = classify(x);
            f.tomb_type.as_ref().is_none_or(|s| s.contains(&x.tomb_type))
                && f.context.as_ref().is_none_or(|s| s.contains(&x.context))
                && f.affiliation.as_ref().is_none_or(|s| s.contains(&a))
                && f.has_inscription.is_none_or(|v| v == x.has_inscription)
                && f.has_photos.is_none_or(|v| v == !x.photo_urls.is_empty())
                && f.locus_id.as_ref().is_none_or(|s| s.contains(&x.locus_id))
                && f.bbox.is_none_or(|b| {
                    let (lat, lon) = (x.location.lat(), x.location.lon());
                    lon >= b.min_lon && lon <= b.max_lon && lat >= b.min_lat && lat <= b.max_lat
                })
                && f.text.as_ref().is_none_or(|t| {
                    x.locus_name.to_lowercase().contains(&t.to_lowercase())
                })
        })
        .map(|x| x.id.clone())
        .collect();
    ids.sort();
    ids
}

/// Per-facet value counts over a set of matches, zero-count values included.
pub fn scan_counts(
    features: &[SurveyFeature],
    ids: &[String],
) -> std::collections::BTreeMap<String, std::collections::BTreeMap<String, usize>> {
    use std::collections::BTreeMap;
    let mut counts: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    let mut seed = |facet: &str, values: Vec<String>| {
        counts.insert(facet.into(), values.into_iter().map(|v| (v, 0)).collect());
    };
    seed("tomb_type", TombType::ALL.iter().map(|t| t.to_string()).collect());
    seed("context", SiteContext::ALL.iter().map(|t| t.to_string()).collect());
    seed("affiliation", CulturalAffiliation::ALL.iter().map(|t| t.to_string()).collect());
    seed("has_inscription", vec!["false".into(), "true".into()]);
    seed("has_photos", vec!["false".into(), "true".into()]);
    seed("locus_id", features.iter().map(|f| f.locus_id.clone()).collect());
    let wanted: std::collections::HashSet<&String> = ids.iter().collect();
    for f in features.iter().filter(|f| wanted.contains(&f.id)) {
        for (facet, value) in [
            ("tomb_type", f.tomb_type.to_string()),
            ("context", f.context.to_string()),
            ("affiliation", classify(f).to_string()),
            ("has_inscription", f.has_inscription.to_string()),
            ("has_photos", (!f.photo_urls.is_empty()).to_string()),
            ("locus_id", f.locus_id.clone()),
        ] {
            *counts.get_mut(facet).unwrap().get_mut(&value).unwrap() += 1;
        }
    }
    counts
}

/// Random corpus with strict ids over `loci` loci inside a small box.
pub fn random_corpus(rng: &mut impl Rng, n: usize, loci: usize) -> Vec<SurveyFeature> {
    const NAMES: [&str; 6] = ["Selinus", "Iotape", "Lamos", "Corus", "Kenetepe", "Toslak"];
    (0..n)
        .map(|i| {
            let l = rng.gen_range(0..loci);
            let locus_id = format!("RC{:04}", l + 1);
            SurveyFeature {
                id: format!("{locus_id}-F{i:04}"),
                locus_id,
                locus_name: format!("{} {}", NAMES[l % NAMES.len()], l),
                tomb_type: *TombType::ALL.choose(rng).unwrap(),
                context: *SiteContext::ALL.choose(rng).unwrap(),
                location: GeoPoint::new(rng.gen_range(36.0..36.5), rng.gen_range(32.0..32.5)).unwrap(),
                elevation_m: rng.gen_range(0.0..1500.0),
                has_inscription: rng.gen_bool(0.3),
                photo_urls: if rng.gen_bool(0.4) { vec![format!("https://images.example.org/{i}.jpg")] } else { vec![] },
                affiliation: if rng.gen_bool(0.1) { Some(*CulturalAffiliation::ALL.choose(rng).unwrap()) } else { None },
                gazetteer_uri: None,
            }
        })
        .collect()
}

fn random_subset<T: Copy + Ord>(rng: &mut impl Rng, all: &[T]) -> Option<std::collections::BTreeSet<T>> {
    if rng.gen_bool(0.5) {
        return None;
    }
    let mut s: std::collections::BTreeSet<T> = all.iter().copied().filter(|_| rng.gen_bool(0.4)).collect();
    if s.is_empty() {
        s.insert(*all.choose(rng).unwrap());
    }
    Some(s)
}

/// Random filter set; `loci` bounds generated locus ids.
pub fn random_filters(rng: &mut impl Rng, loci: usize) -> FilterSet {
    let flag = |rng: &mut dyn rand::RngCore| match rng.gen_range(0..3) {
        0 => None,
        1 => Some(true),
        _ => Some(false),
    };
    FilterSet {
        tomb_type: random_subset(rng, TombType::ALL),
        context: random_subset(rng, SiteContext::ALL),
        affiliation: random_subset(rng, CulturalAffiliation::ALL),
        has_inscription: flag(rng),
        has_photos: flag(rng),
        locus_id: rng.gen_bool(0.2).then(|| {
            (0..rng.gen_range(1..4))
                .map(|_| format!("RC{:04}", rng.gen_range(1..=loci + 1)))
                .collect()
        }),
        bbox: rng.gen_bool(0.3).then(|| {
            let (a, b): (f64, f64) = (rng.gen_range(32.0..32.5), rng.gen_range(32.0..32.5));
            let (c, d): (f64, f64) = (rng.gen_range(36.0..36.5), rng.gen_range(36.0..36.5));
            BBox { min_lon: a.min(b), max_lon: a.max(b), min_lat: c.min(d), max_lat: c.max(d) }
        }),
        text: rng.gen_bool(0.15).then(|| ["sel", "LAMOS", "o", "us 1", "zzz"].choose(rng).unwrap().to_string()),
    }
}

/// Dense transition matrix of the masked 5-point stencil, row-major `n x n`,
/// acting on column vectors: `u' = P u`.
pub fn transition_matrix(cols: usize, rows: usize, mask: &[bool], alpha: f64) -> Vec<f64> {
    let n = cols * rows;
    let mut p = vec![0.0; n * n];
    for r in 0..rows {
        for c in 0..cols {
            let i = r * cols + c;
            if !mask[i] {
                continue;
            }
            let mut deg = 0.0;
            let neighbours = [
                (c > 0).then(|| i - 1),
                (c + 1 < cols).then(|| i + 1),
                (r > 0).then(|| i - cols),
                (r + 1 < rows).then(|| i + cols),
            ];
            for j in neighbours.into_iter().flatten().filter(|&j| mask[j]) {
                p[i * n + j] = alpha;
                deg += 1.0;
            }
            p[i * n + i] = 1.0 - alpha * deg;
        }
    }
    p
}

pub fn mat_mul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    out
}

/// `P^steps` by repeated squaring.
pub fn mat_pow(p: &[f64], n: usize, mut steps: usize) -> Vec<f64> {
    let mut result: Vec<f64> = (0..n * n).map(|k| if k / n == k % n { 1.0 } else { 0.0 }).collect();
    let mut base = p.to_vec();
    while steps > 0 {
        if steps & 1 == 1 {
            result = mat_mul(&result, &base, n);
        }
        base = mat_mul(&base, &base, n);
        steps >>= 1;
    }
    result
}

pub fn mat_vec(m: &[f64], v: &[f64]) -> Vec<f64> {
    let n = v.len();
    (0..n).map(|i| (0..n).map(|j| m[i * n + j] * v[j]).sum()).collect()
}

/// Fraction of grid columns whose zones, read south to north and ignoring
/// NoData, never step back from Hinterland to Mesogeia/Polis or from
/// Mesogeia to Polis. Returns `(ordered, columns with any zone)`.
pub fn transect_order(zones: &geopub::diffusion::ZoneRaster) -> (usize, usize) {
    let (cols, rows) = (zones.grid.n_cols, zones.grid.n_rows);
    let (mut ordered, mut counted) = (0, 0);
    for c in 0..cols {
        let seq: Vec<usize> = (0..rows).filter_map(|r| zones.zone_at(c, r)).map(|a| a as usize).collect();
        if seq.is_empty() {
            continue;
        }
        counted += 1;
        if seq.windows(2).all(|w| w[0] <= w[1]) {
            ordered += 1;
        }
    }
    (ordered, counted)
}

/// Independent reading of a feed body: `(record uri, lat, lon)` per entry in
/// document order, parsed with a generic XML or JSON parser.
pub fn feed_points(format: geopub::feeds::FeedFormat, body: &[u8]) -> Vec<(String, f64, f64)> {
    use geopub::feeds::{FeedFormat, ATOM_NS, GEORSS_NS, KML_NS};
    let text = std::str::from_utf8(body).expect("feed is UTF-8");
    match format {
        FeedFormat::GeoJson => {
            let v: serde_json::Value = serde_json::from_str(text).expect("GeoJSON parses");
            assert_eq!(v["type"], "FeatureCollection");
            v["features"]
                .as_array()
                .unwrap()
                .iter()
                .map(|f| {
                    assert_eq!(f["geometry"]["type"], "Point");
                    let c = &f["geometry"]["coordinates"];
                    assert_eq!(f["id"], f["properties"]["source_uri"]);
                    (f["id"].as_str().unwrap().to_string(), c[1].as_f64().unwrap(), c[0].as_f64().unwrap())
                })
                .collect()
        }
        FeedFormat::Atom => {
            let doc = roxmltree::Document::parse(text).expect("Atom is well-formed");
            let root = doc.root_element();
            assert_eq!(root.tag_name().namespace(), Some(ATOM_NS));
            assert_eq!(root.tag_name().name(), "feed");
            root.children()
                .filter(|n| n.has_tag_name((ATOM_NS, "entry")))
                .map(|e| {
                    let id = e.children().find(|n| n.has_tag_name((ATOM_NS, "id"))).unwrap().text().unwrap();
                    let point = e.children().find(|n| n.has_tag_name((GEORSS_NS, "point"))).unwrap().text().unwrap();
                    let mut it = point.split_whitespace().map(|s| s.parse::<f64>().unwrap());
                    (id.to_string(), it.next().unwrap(), it.next().unwrap())
                })
                .collect()
        }
        FeedFormat::Kml => {
            let doc = roxmltree::Document::parse(text).expect("KML is well-formed");
            let root = doc.root_element();
            assert_eq!(root.tag_name().namespace(), Some(KML_NS));
            doc.descendants()
                .filter(|n| n.has_tag_name((KML_NS, "Placemark")))
                .map(|p| {
                    let uri = p
                        .descendants()
                        .find(|n| n.has_tag_name((KML_NS, "Data")) && n.attribute("name") == Some("source_uri"))
                        .and_then(|d| d.children().find(|n| n.has_tag_name((KML_NS, "value"))))
                        .and_then(|v| v.text())
                        .unwrap();
                    let coords = p.descendants().find(|n| n.has_tag_name((KML_NS, "coordinates"))).unwrap().text().unwrap();
                    let mut it = coords.trim().split(',').map(|s| s.parse::<f64>().unwrap());
                    let lon = it.next().unwrap();
                    (uri.to_string(), it.next().unwrap(), lon)
                })
                .collect()
        }
    }
}

pub fn fixture_zones() -> geopub::diffusion::ZoneRaster {
    use geopub::diffusion::{interpolate_zones, DiffusionParams, DEFAULT_CELL_CAP, DEFAULT_CELL_M};
    let b = barrier();
    interpolate_zones(&fixture_features(), &b, &b.bbox(), DEFAULT_CELL_M, &DiffusionParams::default(), DEFAULT_CELL_CAP)
        .unwrap()
        .0
}

/// Every `href` and `src` attribute in an XHTML document, in document order.
pub fn xhtml_refs(bytes: &[u8]) -> (Vec<String>, Vec<String>) {
    let text = std::str::from_utf8(bytes).expect("UTF-8 markup");
    let opts = roxmltree::ParsingOptions { allow_dtd: true, ..Default::default() };
    let doc = roxmltree::Document::parse_with_options(text, opts).expect("well-formed XHTML");
    let hrefs = doc.descendants().filter_map(|n| n.attribute("href")).map(String::from).collect();
    let srcs = doc.descendants().filter_map(|n| n.attribute("src")).map(String::from).collect();
    (hrefs, srcs)
}

/// OCF structure check using a general ZIP reader: `mimetype` first and
/// stored, a container pointing at the package document, and a manifest
/// that lists exactly the content files present. Returns the manifest hrefs.
pub fn check_epub(bytes: &[u8]) -> Result<Vec<String>, String> {
    use std::io::Read;
    if bytes.get(30..38) != Some(b"mimetype") || bytes.get(38..58) != Some(b"application/epub+zip") {
        return Err("mimetype is not the first, uncompressed entry".into());
    }
    let mut archive = zip::ZipArchive::new(std::io::Cursor::new(bytes)).map_err(|e| e.to_string())?;
    let mut present = Vec::new();
    for name in archive.file_names() {
        present.push(name.map_err(|e| e.to_string())?.into_owned());
    }
    present.sort();
    let mut read = |name: &str| -> Result<(String, zip::CompressionMethod), String> {
        let mut f = archive.by_name(name).map_err(|e| format!("{name}: {e}"))?;
        let mut s = String::new();
        f.read_to_string(&mut s).map_err(|e| format!("{name}: {e}"))?;
        Ok((s, f.compression()))
    };
    let (mimetype, method) = read("mimetype")?;
    if mimetype != "application/epub+zip" || method != zip::CompressionMethod::Stored {
        return Err("bad mimetype entry".into());
    }
    let (container, _) = read("META-INF/container.xml")?;
    let cdoc = roxmltree::Document::parse(&container).map_err(|e| e.to_string())?;
    let opf_path = cdoc
        .descendants()
        .find(|n| n.tag_name().name() == "rootfile")
        .and_then(|n| n.attribute("full-path"))
        .ok_or("container has no rootfile")?
        .to_string();
    let (opf, _) = read(&opf_path)?;
    let odoc = roxmltree::Document::parse(&opf).map_err(|e| e.to_string())?;
    let base = opf_path.rsplit_once('/').map(|(d, _)| format!("{d}/")).unwrap_or_default();
    let hrefs: Vec<String> = odoc
        .descendants()
        .filter(|n| n.tag_name().name() == "item")
        .map(|n| n.attribute("href").unwrap_or_default().to_string())
        .collect();
    let mut listed: Vec<String> = hrefs.iter().map(|h| format!("{base}{h}")).collect();
    listed.push(opf_path.clone());
    listed.push("mimetype".into());
    listed.push("META-INF/container.xml".into());
    listed.sort();
    if listed != present {
        return Err(format!("manifest {listed:?} != archive {present:?}"));
    }
    for h in &hrefs {
        if h.ends_with(".xhtml") {
            let (x, _) = read(&format!("{base}{h}"))?;
            let opts = roxmltree::ParsingOptions { allow_dtd: true, ..Default::default() };
            roxmltree::Document::parse_with_options(&x, opts).map_err(|e| format!("{h}: {e}"))?;
        }
    }
    Ok(hrefs)
}

pub type HttpReply = (u16, Vec<(String, String)>, Vec<u8>);

/// Minimal HTTP/1.1 exchange over a fresh connection. Returns status,
/// lower-cased headers and the body.
pub fn http_request(
    addr: std::net::SocketAddr,
    method: &str,
    path: &str,
) -> std::io::Result<HttpReply> {
    use std::io::{Read, Write};
    let mut s = std::net::TcpStream::connect(addr)?;
    s.set_read_timeout(Some(std::time::Duration::from_secs(30)))?;
    write!(s, "{method} {path} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\nContent-Length: 0\r\n\r\n")?;
    let mut raw = Vec::new();
    s.read_to_end(&mut raw)?;
    let split = raw.windows(4).position(|w| w == b"\r\n\r\n").expect("header terminator");
    let head = String::from_utf8_lossy(&raw[..split]).into_owned();
    let mut lines = head.split("\r\n");
    let status = lines.next().unwrap().split(' ').nth(1).unwrap().parse().unwrap();
    let headers: Vec<(String, String)> = lines
        .filter_map(|l| l.split_once(':'))
        .map(|(k, v)| (k.trim().to_ascii_lowercase(), v.trim().to_string()))
        .collect();
    let mut body = raw[split + 4..].to_vec();
    if headers.iter().any(|(k, v)| k == "transfer-encoding" && v.contains("chunked")) {
        let mut out = Vec::new();
        let mut rest = body.as_slice();
        loop {
            let eol = rest.windows(2).position(|w| w == b"\r\n").unwrap();
            let len = usize::from_str_radix(std::str::from_utf8(&rest[..eol]).unwrap().trim(), 16).unwrap();
            if len == 0 {
                break;
            }
            out.extend_from_slice(&rest[eol + 2..eol + 2 + len]);
            rest = &rest[eol + 4 + len..];
        }
        body = out;
    }
    Ok((status, headers, body))
}

pub fn header<'a>(headers: &'a [(String, String)], name: &str) -> Option<&'a str> {
    headers.iter().find(|(k, _)| k == name).map(|(_, v)| v.as_str())
}

/// Runs the command-line binary, returning exit code and stderr.
pub fn run_cli(args: &[&std::ffi::OsStr]) -> (i32, String, String) {
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_geopub")).args(args).output().expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

/// A port that was free a moment ago.
pub fn free_port() -> u16 {
    std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port()
}

/// Starts `geopub serve` and waits until it answers.
pub fn spawn_server(workspace: &std::path::Path, port: u16, public_url: &str) -> std::process::Child {
    let mut child = std::process::Command::new(env!("CARGO_BIN_EXE_geopub"))
        .arg("serve")
        .arg(workspace)
        .args(["--port", &port.to_string(), "--public-url", public_url])
        .stdout(std::process::Stdio::null())
        .stderr(std::process::Stdio::null())
        .spawn()
        .expect("server starts");
    let addr: std::net::SocketAddr = ([127, 0, 0, 1], port).into();
    for _ in 0..200 {
        if http_request(addr, "GET", "/api/manifest").is_ok() {
            return child;
        }
        std::thread::sleep(std::time::Duration::from_millis(25));
    }
    let _ = child.kill();
    let _ = child.wait();
    panic!("server did not come up on port {port}");
}

/// Byte-mode capacities for versions 1..=10 as published in the ISO symbol
/// tables, rows L, M, Q, H.
pub const ISO_BYTE_CAPACITY: [[usize; 10]; 4] = [
    [17, 32, 53, 78, 106, 134, 154, 192, 230, 271],
    [14, 26, 42, 62, 84, 106, 122, 152, 180, 213],
    [11, 20, 32, 46, 60, 74, 86, 108, 130, 151],
    [7, 14, 24, 34, 44, 58, 64, 84, 98, 119],
];

pub fn iso_capacity(ecc: geopub::qr::EccLevel, version: u8) -> usize {
    use geopub::qr::EccLevel;
    let row = match ecc {
        EccLevel::L => 0,
        EccLevel::M => 1,
        EccLevel::Q => 2,
        EccLevel::H => 3,
    };
    ISO_BYTE_CAPACITY[row][version as usize - 1]
}

/// Smallest version whose table capacity holds `len` bytes.
pub fn iso_version(ecc: geopub::qr::EccLevel, len: usize) -> Option<u8> {
    (1..=10).find(|&v| iso_capacity(ecc, v) >= len)
}

/// Flips a random non-empty set of bits in `per_block[b]` distinct
/// codewords of each block `b`.
pub fn corrupt_codewords(m: &geopub::qr::QrMatrix, per_block: &[usize], rng: &mut impl Rng) -> geopub::qr::QrMatrix {
    use geopub::qr::layout::{Blocks, Canvas};
    let positions = Canvas::new(m.version).data_positions();
    let owner = Blocks::new(m.version, m.ecc_level).interleaved_owner();
    let mut out = m.clone();
    for (block, &count) in per_block.iter().enumerate() {
        let mut candidates: Vec<usize> = (0..owner.len()).filter(|&i| owner[i] == block).collect();
        candidates.shuffle(rng);
        for &cw in &candidates[..count] {
            let mask: u8 = rng.gen_range(1..=255);
            for bit in 0..8 {
                if mask >> bit & 1 == 1 {
                    let (x, y) = positions[cw * 8 + bit];
                    out.modules[y][x] = !out.modules[y][x];
                }
            }
        }
    }
    out
}
