//! A workspace is a plain directory of open files:
//!
//! ```text
//! dataset.csv            normalized features
//! manifest.json          DatasetManifest
//! ingest_report.json     IngestReport
//! zones/zones.json       grid, parameters and zone metadata
//! zones/zones.png        rendered zone map
//! zones/zones.pgw        world file for zones.png
//! zones/barrier.geojson  barrier the zones were computed with
//! articles/*.txt         narrative sources
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diffusion::{
    interpolate_zones, render_zone_png, world_file, BarrierPolygon, DepositWarning, DiffusionError, DiffusionParams,
    ZoneMetadata, ZoneRaster,
};
use crate::export::{NarrativeDoc, NarrativeError};
use crate::facet::BBox;
use crate::ingest::{parse_dataset, write_dataset, IngestError, IngestOptions, IngestReport};
use crate::model::{DatasetManifest, SurveyFeature};

pub const DATASET_FILE: &str = "dataset.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const REPORT_FILE: &str = "ingest_report.json";
pub const ZONES_CONFIG_FILE: &str = "zones/zones.json";
pub const ZONES_PNG_FILE: &str = "zones/zones.png";
pub const ZONES_WORLD_FILE: &str = "zones/zones.pgw";
pub const BARRIER_FILE: &str = "zones/barrier.geojson";
pub const ARTICLES_DIR: &str = "articles";

#[derive(Debug, Error)]
pub enum WorkspaceError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{path}: {source}")]
    Dataset { path: PathBuf, source: IngestError },
    #[error("{path}: {count} row(s) no longer parse")]
    DatasetRows { path: PathBuf, count: usize },
    #[error(transparent)]
    Diffusion(#[from] DiffusionError),
    #[error(transparent)]
    Index(#[from] crate::facet::QueryError),
    #[error("{path}: {source}")]
    Narrative { path: PathBuf, source: NarrativeError },
    #[error("article_id {id} appears in both {first} and {second}")]
    DuplicateArticle { id: String, first: PathBuf, second: PathBuf },
}

/// Everything needed to recompute a zone raster from the dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneConfig {
    pub cell_size_m: f64,
    pub cell_cap: usize,
    pub domain: BBox,
    pub metadata: ZoneMetadata,
}

#[derive(Debug, Clone)]
pub struct Workspace {
    root: PathBuf,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> WorkspaceError + '_ {
    move |source| WorkspaceError::Io { path: path.to_path_buf(), source }
}

impl Workspace {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Workspace { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    fn write(&self, rel: &str, bytes: &[u8]) -> Result<(), WorkspaceError> {
        let path = self.path(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
        fs::write(&path, bytes).map_err(io_err(&path))
    }

    fn read(&self, rel: &str) -> Result<Vec<u8>, WorkspaceError> {
        let path = self.path(rel);
        fs::read(&path).map_err(io_err(&path))
    }

    fn write_json<T: Serialize>(&self, rel: &str, value: &T) -> Result<(), WorkspaceError> {
        let mut bytes = serde_json::to_vec_pretty(value)
            .map_err(|source| WorkspaceError::Json { path: self.path(rel), source })?;
        bytes.push(b'\n');
        self.write(rel, &bytes)
    }

    fn read_json<T: for<'de> Deserialize<'de>>(&self, rel: &str) -> Result<T, WorkspaceError> {
        let bytes = self.read(rel)?;
        serde_json::from_slice(&bytes).map_err(|source| WorkspaceError::Json { path: self.path(rel), source })
    }

    pub fn write_ingest(
        &self,
        features: &[SurveyFeature],
        manifest: &DatasetManifest,
        report: &IngestReport,
    ) -> Result<(), WorkspaceError> {
        let mut csv = Vec::new();
        write_dataset(features, &mut csv)
            .map_err(|source| WorkspaceError::Dataset { path: self.path(DATASET_FILE), source })?;
        self.write(DATASET_FILE, &csv)?;
        self.write_json(MANIFEST_FILE, manifest)?;
        self.write_json(REPORT_FILE, report)
    }

    pub fn write_report(&self, report: &IngestReport) -> Result<(), WorkspaceError> {
        self.write_json(REPORT_FILE, report)
    }

    pub fn load_manifest(&self) -> Result<DatasetManifest, WorkspaceError> {
        self.read_json(MANIFEST_FILE)
    }

    pub fn load_report(&self) -> Result<IngestReport, WorkspaceError> {
        self.read_json(REPORT_FILE)
    }

    pub fn load_dataset(&self) -> Result<(DatasetManifest, Vec<SurveyFeature>), WorkspaceError> {
        let manifest = self.load_manifest()?;
        let path = self.path(DATASET_FILE);
        let bytes = self.read(DATASET_FILE)?;
        let (features, report) = parse_dataset(bytes.as_slice(), &IngestOptions { strict_ids: false })
            .map_err(|source| WorkspaceError::Dataset { path: path.clone(), source })?;
        if !report.rejected.is_empty() {
            return Err(WorkspaceError::DatasetRows { path, count: report.rejected.len() });
        }
        Ok((manifest, features))
    }

    /// Computes zones over the barrier's bounding box and writes the PNG,
    /// world file, configuration and a copy of the barrier.
    pub fn compute_zones(
        &self,
        features: &[SurveyFeature],
        barrier: &BarrierPolygon,
        cell_size_m: f64,
        params: &DiffusionParams,
        cell_cap: usize,
    ) -> Result<(ZoneRaster, Vec<DepositWarning>), WorkspaceError> {
        let domain = barrier.bbox();
        let (zones, warnings) = interpolate_zones(features, barrier, &domain, cell_size_m, params, cell_cap)?;
        let config = ZoneConfig {
            cell_size_m,
            cell_cap,
            domain,
            metadata: ZoneMetadata::describe(&zones, "zones.png"),
        };
        self.write(ZONES_PNG_FILE, &render_zone_png(&zones))?;
        self.write(ZONES_WORLD_FILE, world_file(&zones.grid).as_bytes())?;
        self.write(BARRIER_FILE, barrier.to_geojson().as_bytes())?;
        self.write_json(ZONES_CONFIG_FILE, &config)?;
        Ok((zones, warnings))
    }

    pub fn has_zones(&self) -> bool {
        self.path(ZONES_CONFIG_FILE).is_file()
    }

    pub fn load_zone_config(&self) -> Result<ZoneConfig, WorkspaceError> {
        self.read_json(ZONES_CONFIG_FILE)
    }

    /// Recomputes the stored zone raster, which is deterministic in the
    /// dataset, barrier and configuration. `None` when no zones were computed.
    pub fn load_zones(&self, features: &[SurveyFeature]) -> Result<Option<ZoneRaster>, WorkspaceError> {
        if !self.has_zones() {
            return Ok(None);
        }
        let config = self.load_zone_config()?;
        let text = self.read(BARRIER_FILE)?;
        let barrier = BarrierPolygon::from_geojson(&String::from_utf8_lossy(&text))?;
        let (zones, _) = interpolate_zones(
            features,
            &barrier,
            &config.domain,
            config.cell_size_m,
            &config.metadata.params,
            config.cell_cap,
        )?;
        Ok(Some(zones))
    }

    /// Copies a narrative into `articles/<article_id>.txt`.
    pub fn add_article(&self, doc: &NarrativeDoc, text: &str) -> Result<PathBuf, WorkspaceError> {
        let rel = format!("{ARTICLES_DIR}/{}.txt", doc.article_id);
        self.write(&rel, text.as_bytes())?;
        Ok(self.path(&rel))
    }

    /// Parses every `articles/*.txt`, keyed by article id.
    pub fn articles(&self) -> Result<BTreeMap<String, NarrativeDoc>, WorkspaceError> {
        let dir = self.path(ARTICLES_DIR);
        let mut out: BTreeMap<String, (PathBuf, NarrativeDoc)> = BTreeMap::new();
        if !dir.is_dir() {
            return Ok(BTreeMap::new());
        }
        let mut paths: Vec<PathBuf> = fs::read_dir(&dir)
            .map_err(io_err(&dir))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "txt"))
            .collect();
        paths.sort();
        for path in paths {
            let text = fs::read_to_string(&path).map_err(io_err(&path))?;
            let doc = NarrativeDoc::parse(&text)
                .map_err(|source| WorkspaceError::Narrative { path: path.clone(), source })?;
            if let Some((first, _)) = out.get(&doc.article_id) {
                return Err(WorkspaceError::DuplicateArticle {
                    id: doc.article_id.clone(),
                    first: first.clone(),
                    second: path,
                });
            }
            out.insert(doc.article_id.clone(), (path, doc));
        }
        Ok(out.into_iter().map(|(k, (_, d))| (k, d)).collect())
    }
}
