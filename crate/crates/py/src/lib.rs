//! Python bindings: features, ingest, faceted search, feeds, zones, QR codes
//! and article export.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use chrono::{DateTime, Utc};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyBytes;

use geopub::diffusion::{self, BarrierPolygon, DiffusionParams, GridSpec, MaskedField, ZoneMetadata};
use geopub::export::{self, NarrativeDoc, ResolveOptions};
use geopub::facet::FilterSet;
use geopub::feeds::{self, FeedFormat};
use geopub::ingest::{self, GazetteerEntry, IngestOptions};
use geopub::qr::{self, EccLevel, QrMatrix};
use geopub::{classify, CulturalAffiliation, DatasetManifest, GeoPoint};

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn bytes(py: Python<'_>, b: &[u8]) -> Py<PyBytes> {
    PyBytes::new(py, b).unbind()
}

fn time_or_now(t: Option<&str>) -> PyResult<DateTime<Utc>> {
    match t {
        None => Ok(Utc::now()),
        Some(s) => DateTime::parse_from_rfc3339(s).map(|t| t.with_timezone(&Utc)).map_err(err),
    }
}

fn ecc(level: &str) -> PyResult<EccLevel> {
    match level {
        "L" => Ok(EccLevel::L),
        "M" => Ok(EccLevel::M),
        "Q" => Ok(EccLevel::Q),
        "H" => Ok(EccLevel::H),
        other => Err(err(format!("unknown error-correction level {other:?}"))),
    }
}

#[pyclass(name = "SurveyFeature", frozen, from_py_object)]
#[derive(Clone)]
struct PyFeature(geopub::SurveyFeature);

#[pymethods]
impl PyFeature {
    #[getter]
    fn id(&self) -> &str {
        &self.0.id
    }
    #[getter]
    fn locus_id(&self) -> &str {
        &self.0.locus_id
    }
    #[getter]
    fn locus_name(&self) -> &str {
        &self.0.locus_name
    }
    #[getter]
    fn tomb_type(&self) -> &'static str {
        self.0.tomb_type.as_str()
    }
    #[getter]
    fn context(&self) -> &'static str {
        self.0.context.as_str()
    }
    #[getter]
    fn lat(&self) -> f64 {
        self.0.location.lat()
    }
    #[getter]
    fn lon(&self) -> f64 {
        self.0.location.lon()
    }
    #[getter]
    fn elevation_m(&self) -> f64 {
        self.0.elevation_m
    }
    #[getter]
    fn has_inscription(&self) -> bool {
        self.0.has_inscription
    }
    #[getter]
    fn photo_urls(&self) -> Vec<String> {
        self.0.photo_urls.clone()
    }
    #[getter]
    fn recorded_affiliation(&self) -> Option<&'static str> {
        self.0.affiliation.map(|a| a.as_str())
    }
    /// Effective affiliation after classification.
    #[getter]
    fn affiliation(&self) -> &'static str {
        classify(&self.0).as_str()
    }
    #[getter]
    fn gazetteer_uri(&self) -> Option<String> {
        self.0.gazetteer_uri.clone()
    }
    fn __repr__(&self) -> String {
        format!("SurveyFeature({:?}, {}, {})", self.0.id, self.0.tomb_type, classify(&self.0))
    }
}

fn unwrap_features(features: Vec<PyFeature>) -> Vec<geopub::SurveyFeature> {
    features.into_iter().map(|f| f.0).collect()
}

#[pyclass(name = "GazetteerEntry", frozen, from_py_object)]
#[derive(Clone)]
struct PyGazetteerEntry(GazetteerEntry);

#[pymethods]
impl PyGazetteerEntry {
    #[getter]
    fn uri(&self) -> &str {
        &self.0.uri
    }
    #[getter]
    fn preferred_name(&self) -> &str {
        &self.0.preferred_name
    }
    #[getter]
    fn aliases(&self) -> Vec<String> {
        self.0.aliases.clone()
    }
}

#[pyclass(name = "IngestReport", frozen, get_all)]
struct PyIngestReport {
    accepted: usize,
    /// (line, reason) per rejected row.
    rejected: Vec<(u64, String)>,
    reconciled: usize,
    unmatched: usize,
    ambiguous: Vec<(String, Vec<String>)>,
}

#[pyclass(name = "DatasetManifest", frozen, from_py_object)]
#[derive(Clone)]
struct PyManifest(DatasetManifest);

#[pymethods]
impl PyManifest {
    #[new]
    #[pyo3(signature = (base_uri, dataset_id="survey", title="Funerary survey features", license_uri="https://creativecommons.org/licenses/by/4.0/"))]
    fn new(base_uri: &str, dataset_id: &str, title: &str, license_uri: &str) -> PyResult<Self> {
        let m = DatasetManifest {
            dataset_id: dataset_id.into(),
            title: title.into(),
            license_uri: license_uri.into(),
            schema_version: geopub::server::SCHEMA_VERSION.into(),
            record_count: 0,
            base_uri: base_uri.into(),
        };
        m.record_uri("x").map_err(err)?;
        Ok(PyManifest(m))
    }
    #[getter]
    fn base_uri(&self) -> &str {
        &self.0.base_uri
    }
    fn record_uri(&self, id: &str) -> PyResult<String> {
        self.0.record_uri(id).map_err(err)
    }
}

#[pyclass(name = "SearchPage", frozen, get_all)]
struct PySearchPage {
    total: usize,
    page: usize,
    per_page: usize,
    matches: Vec<String>,
    facet_counts: BTreeMap<String, BTreeMap<String, usize>>,
}

#[pyclass(name = "FacetIndex", frozen)]
struct PyFacetIndex(geopub::FacetIndex);

#[pymethods]
impl PyFacetIndex {
    #[new]
    fn new(features: Vec<PyFeature>) -> PyResult<Self> {
        geopub::FacetIndex::build(unwrap_features(features)).map(PyFacetIndex).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    /// Runs a query string such as `affiliation=Polis&page=2`.
    #[pyo3(signature = (query=""))]
    fn search(&self, query: &str) -> PyResult<PySearchPage> {
        let (filters, paging) = FilterSet::parse_query(query).map_err(err)?;
        let p = self.0.query(&filters, paging.page, paging.per_page).map_err(err)?;
        Ok(PySearchPage { total: p.total, page: p.page, per_page: p.per_page, matches: p.matches, facet_counts: p.facet_counts })
    }

    /// Serializes one page of results as `atom`, `kml` or `geojson`.
    #[pyo3(signature = (format, manifest, query="", self_url=None, updated=None))]
    fn feed(
        &self,
        py: Python<'_>,
        format: &str,
        manifest: &PyManifest,
        query: &str,
        self_url: Option<&str>,
        updated: Option<&str>,
    ) -> PyResult<Py<PyBytes>> {
        let fmt = FeedFormat::from_name(format).ok_or_else(|| err(format!("unknown feed format {format:?}")))?;
        let (filters, paging) = FilterSet::parse_query(query).map_err(err)?;
        let page = self.0.query(&filters, paging.page, paging.per_page).map_err(err)?;
        let doc = match fmt {
            FeedFormat::GeoJson => feeds::to_geojson(&page, &manifest.0, &self.0),
            FeedFormat::Kml => feeds::to_kml(&page, &manifest.0, &self.0),
            FeedFormat::Atom => {
                let default = format!("{}/feeds/atom?{query}", manifest.0.base_uri.trim_end_matches('/'));
                feeds::to_atom(&page, &manifest.0, &self.0, self_url.unwrap_or(&default), &time_or_now(updated)?)
            }
        }
        .map_err(err)?;
        Ok(bytes(py, &doc.body))
    }
}

#[pyclass(name = "ZoneRaster", frozen)]
struct PyZones(diffusion::ZoneRaster);

fn affiliation(name: &str) -> PyResult<CulturalAffiliation> {
    name.parse().map_err(|_| err(format!("unknown affiliation {name:?}")))
}

#[pymethods]
impl PyZones {
    #[getter]
    fn n_cols(&self) -> usize {
        self.0.grid.n_cols
    }
    #[getter]
    fn n_rows(&self) -> usize {
        self.0.grid.n_rows
    }
    #[getter]
    fn steps(&self) -> usize {
        self.0.steps
    }
    /// Zone name at a cell (row 0 is south), or None for NoData.
    fn zone_at(&self, col: usize, row: usize) -> PyResult<Option<&'static str>> {
        self.check(col, row)?;
        Ok(self.0.zone_at(col, row).map(|a| a.as_str()))
    }
    fn prob_at(&self, affiliation_name: &str, col: usize, row: usize) -> PyResult<f64> {
        self.check(col, row)?;
        Ok(self.0.prob_at(affiliation(affiliation_name)?, col, row))
    }
    fn zone_counts(&self) -> BTreeMap<String, usize> {
        let (counts, nodata) = self.0.zone_counts();
        let mut out: BTreeMap<String, usize> =
            CulturalAffiliation::ALL.iter().map(|a| (a.to_string(), counts[*a as usize])).collect();
        out.insert("NoData".into(), nodata);
        out
    }
    fn png(&self, py: Python<'_>) -> Py<PyBytes> {
        bytes(py, &diffusion::render_zone_png(&self.0))
    }
    fn world_file(&self) -> String {
        diffusion::world_file(&self.0.grid)
    }
    fn metadata_json(&self, png_link: &str) -> String {
        serde_json::to_string(&ZoneMetadata::describe(&self.0, png_link)).expect("metadata serializes")
    }
}

impl PyZones {
    fn check(&self, col: usize, row: usize) -> PyResult<()> {
        if col < self.0.grid.n_cols && row < self.0.grid.n_rows {
            Ok(())
        } else {
            Err(err(format!("cell ({col}, {row}) outside the grid")))
        }
    }
}

#[pyfunction]
#[pyo3(signature = (text, strict_ids=true))]
fn parse_dataset(text: &str, strict_ids: bool) -> PyResult<(Vec<PyFeature>, PyIngestReport)> {
    let (features, report) = ingest::parse_dataset(text.as_bytes(), &IngestOptions { strict_ids }).map_err(err)?;
    let report = PyIngestReport {
        accepted: report.accepted,
        rejected: report.rejected.into_iter().map(|r| (r.line, r.reason)).collect(),
        reconciled: report.reconciled,
        unmatched: report.unmatched,
        ambiguous: report.ambiguous,
    };
    Ok((features.into_iter().map(PyFeature).collect(), report))
}

#[pyfunction]
fn load_gazetteer(text: &str) -> PyResult<Vec<PyGazetteerEntry>> {
    Ok(ingest::load_gazetteer(text.as_bytes()).map_err(err)?.into_iter().map(PyGazetteerEntry).collect())
}

/// Returns the reconciled features and `(reconciled, unmatched, ambiguous)`.
#[pyfunction]
#[allow(clippy::type_complexity)]
fn reconcile_places(
    features: Vec<PyFeature>,
    gazetteer: Vec<PyGazetteerEntry>,
) -> (Vec<PyFeature>, (usize, usize, Vec<(String, Vec<String>)>)) {
    let entries: Vec<GazetteerEntry> = gazetteer.into_iter().map(|g| g.0).collect();
    let (out, r) = ingest::reconcile_places(unwrap_features(features), &entries);
    (out.into_iter().map(PyFeature).collect(), (r.reconciled, r.unmatched, r.ambiguous))
}

#[pyfunction]
#[pyo3(signature = (features, barrier_geojson, cell_m=diffusion::DEFAULT_CELL_M, alpha=diffusion::DEFAULT_ALPHA, steps=None, bandwidth_m=Some(diffusion::DEFAULT_BANDWIDTH_M), epsilon=diffusion::DEFAULT_EPSILON, cell_cap=diffusion::DEFAULT_CELL_CAP))]
#[allow(clippy::too_many_arguments)]
fn compute_zones(
    py: Python<'_>,
    features: Vec<PyFeature>,
    barrier_geojson: &str,
    cell_m: f64,
    alpha: f64,
    steps: Option<usize>,
    bandwidth_m: Option<f64>,
    epsilon: f64,
    cell_cap: usize,
) -> PyResult<PyZones> {
    let barrier = BarrierPolygon::from_geojson(barrier_geojson).map_err(err)?;
    let bandwidth_m = if steps.is_some() && bandwidth_m == Some(diffusion::DEFAULT_BANDWIDTH_M) { None } else { bandwidth_m };
    let params = DiffusionParams { alpha, steps: steps.unwrap_or(0), bandwidth_m, epsilon };
    let features = unwrap_features(features);
    py.detach(|| diffusion::interpolate_zones(&features, &barrier, &barrier.bbox(), cell_m, &params, cell_cap))
        .map(|(z, _)| PyZones(z))
        .map_err(err)
}

/// Runs the masked diffusion stencil on a row-major grid (row 0 south).
#[pyfunction]
fn diffuse(values: Vec<f64>, mask: Vec<bool>, cols: usize, rows: usize, alpha: f64, steps: usize) -> PyResult<Vec<f64>> {
    if values.len() != cols * rows || mask.len() != cols * rows {
        return Err(err(format!("expected {} cells", cols * rows)));
    }
    let grid = GridSpec {
        origin: GeoPoint::new(0.0, 0.0).map_err(err)?,
        cell_size_m: 1.0,
        n_cols: cols,
        n_rows: rows,
        ref_lat: 0.0,
    };
    let mut field = MaskedField::zeros(grid, Arc::new(mask));
    for (i, v) in values.into_iter().enumerate() {
        if field.active[i] {
            field.values[i] = v;
        }
    }
    let params = DiffusionParams { alpha, steps, bandwidth_m: None, epsilon: diffusion::DEFAULT_EPSILON };
    Ok(diffusion::diffuse(&field, &params).map_err(err)?.values)
}

#[pyfunction]
#[pyo3(signature = (text, level="M"))]
fn qr_encode(text: &str, level: &str) -> PyResult<(u8, Vec<Vec<bool>>)> {
    let m = qr::encode_qr(text, ecc(level)?).map_err(err)?;
    Ok((m.version, m.modules))
}

#[pyfunction]
fn qr_decode(modules: Vec<Vec<bool>>) -> PyResult<String> {
    qr::decode_qr(&QrMatrix::from_modules(modules).map_err(err)?).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (text, level="M", module_px=4, quiet_modules=qr::DEFAULT_QUIET_MODULES))]
fn qr_png(py: Python<'_>, text: &str, level: &str, module_px: usize, quiet_modules: usize) -> PyResult<Py<PyBytes>> {
    let m = qr::encode_qr(text, ecc(level)?).map_err(err)?;
    Ok(bytes(py, &qr::render_qr_png(&m, module_px, quiet_modules).map_err(err)?))
}

#[pyfunction]
fn qr_scan(png: &[u8]) -> PyResult<String> {
    qr::scan_qr_png(png).map_err(err)
}

/// Exports a narrative as `html`, `print` or `epub`. Returns relative path to
/// file bytes; an epub is a single `<article_id>.epub` entry.
#[pyfunction]
#[pyo3(signature = (article, index, manifest, format, service_url, asset_dir=".", zones=None, build_time=None))]
#[allow(clippy::too_many_arguments)]
fn export_article(
    py: Python<'_>,
    article: &str,
    index: &PyFacetIndex,
    manifest: &PyManifest,
    format: &str,
    service_url: &str,
    asset_dir: &str,
    zones: Option<&PyZones>,
    build_time: Option<&str>,
) -> PyResult<BTreeMap<String, Py<PyBytes>>> {
    let doc = NarrativeDoc::parse(article).map_err(err)?;
    let opts = ResolveOptions { service_url: service_url.into(), asset_dir: PathBuf::from(asset_dir) };
    let resolved = export::resolve_embeds(&doc, &index.0, &manifest.0, zones.map(|z| &z.0), &opts);
    let files = match format {
        "html" => export::export_html(&resolved).map_err(err)?.files,
        "print" => export::export_print(&resolved).map_err(err)?.files,
        "epub" => {
            let pkg = export::export_epub(&resolved, &time_or_now(build_time)?).map_err(err)?;
            BTreeMap::from([(format!("{}.epub", doc.article_id), pkg.bytes)])
        }
        other => return Err(err(format!("unknown export format {other:?}"))),
    };
    Ok(files.into_iter().map(|(k, v)| (k, bytes(py, &v))).collect())
}

/// Runs the command-line interface with `args` (without the program name)
/// and returns its exit code.
#[pyfunction]
fn run_cli(py: Python<'_>, args: Vec<String>) -> i32 {
    py.detach(|| geopub::cli::run(std::iter::once("geopub".to_string()).chain(args)))
}

#[pymodule]
fn geopub_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyFeature>()?;
    m.add_class::<PyGazetteerEntry>()?;
    m.add_class::<PyIngestReport>()?;
    m.add_class::<PyManifest>()?;
    m.add_class::<PySearchPage>()?;
    m.add_class::<PyFacetIndex>()?;
    m.add_class::<PyZones>()?;
    m.add_function(wrap_pyfunction!(parse_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(load_gazetteer, m)?)?;
    m.add_function(wrap_pyfunction!(reconcile_places, m)?)?;
    m.add_function(wrap_pyfunction!(compute_zones, m)?)?;
    m.add_function(wrap_pyfunction!(diffuse, m)?)?;
    m.add_function(wrap_pyfunction!(qr_encode, m)?)?;
    m.add_function(wrap_pyfunction!(qr_decode, m)?)?;
    m.add_function(wrap_pyfunction!(qr_png, m)?)?;
    m.add_function(wrap_pyfunction!(qr_scan, m)?)?;
    m.add_function(wrap_pyfunction!(export_article, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    Ok(())
}
