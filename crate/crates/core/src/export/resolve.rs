use std::path::{Path, PathBuf};

use super::narrative::{Block, NarrativeDoc};
use super::staticmap::render_static_map;
use crate::diffusion::ZoneRaster;
use crate::facet::{FacetIndex, FilterSet, ResultPage};
use crate::model::DatasetManifest;

#[derive(Debug, Clone)]
pub struct ResolveOptions {
    /// Public root of the feed service, e.g. `https://data.example.org`.
    pub service_url: String,
    /// Directory that relative figure paths are read from.
    pub asset_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapKind {
    Mini,
    Master,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecordLink {
    pub id: String,
    pub uri: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapEmbed {
    pub kind: MapKind,
    /// 1-based position among the document's map blocks.
    pub number: usize,
    pub caption: String,
    pub filters: FilterSet,
    pub page: ResultPage,
    pub records: Vec<RecordLink>,
    pub png: Vec<u8>,
    pub feed_url: String,
}

impl MapEmbed {
    pub fn image_path(&self) -> String {
        format!("maps/{}.png", self.number)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FigureEmbed {
    pub number: usize,
    pub caption: String,
    pub extension: &'static str,
    pub media_type: &'static str,
    pub bytes: Vec<u8>,
}

impl FigureEmbed {
    pub fn image_path(&self) -> String {
        format!("figures/{}.{}", self.number, self.extension)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ResolvedBlock {
    Paragraph(String),
    Heading { level: u8, text: String },
    Figure(FigureEmbed),
    Map(Box<MapEmbed>),
    Failed { source: Block, reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockError {
    /// 1-based position of the block in the body.
    pub block: usize,
    pub reason: String,
}

impl std::fmt::Display for BlockError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "block {}: {}", self.block, self.reason)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedDoc {
    pub article_id: String,
    pub title: String,
    pub authors: Vec<String>,
    pub canonical_url: Option<String>,
    pub blocks: Vec<ResolvedBlock>,
}

impl ResolvedDoc {
    pub fn errors(&self) -> Vec<BlockError> {
        self.blocks
            .iter()
            .enumerate()
            .filter_map(|(i, b)| match b {
                ResolvedBlock::Failed { reason, .. } => Some(BlockError { block: i + 1, reason: reason.clone() }),
                _ => None,
            })
            .collect()
    }

    pub fn maps(&self) -> impl Iterator<Item = &MapEmbed> {
        self.blocks.iter().filter_map(|b| match b {
            ResolvedBlock::Map(m) => Some(m.as_ref()),
            _ => None,
        })
    }

    pub fn figures(&self) -> impl Iterator<Item = &FigureEmbed> {
        self.blocks.iter().filter_map(|b| match b {
            ResolvedBlock::Figure(f) => Some(f),
            _ => None,
        })
    }
}

/// Live GeoJSON feed URL for a filter set.
pub fn feed_url(service_url: &str, filters: &FilterSet) -> String {
    let base = format!("{}/feeds/geojson", service_url.trim_end_matches('/'));
    let q = filters.to_query_string();
    if q.is_empty() {
        base
    } else {
        format!("{base}?{q}")
    }
}

fn image_type(path: &str) -> Option<(&'static str, &'static str)> {
    let ext = Path::new(path).extension()?.to_str()?.to_ascii_lowercase();
    match ext.as_str() {
        "png" => Some(("png", "image/png")),
        "jpg" | "jpeg" => Some(("jpg", "image/jpeg")),
        "gif" => Some(("gif", "image/gif")),
        "svg" => Some(("svg", "image/svg+xml")),
        _ => None,
    }
}

/// Runs every map query, renders its static map, and loads figure images.
/// A block that cannot be resolved becomes [`ResolvedBlock::Failed`]; other
/// blocks are unaffected.
pub fn resolve_embeds(
    doc: &NarrativeDoc,
    index: &FacetIndex,
    manifest: &DatasetManifest,
    zones: Option<&ZoneRaster>,
    opts: &ResolveOptions,
) -> ResolvedDoc {
    let mut maps = 0;
    let mut figures = 0;
    let blocks = doc
        .body
        .iter()
        .map(|block| {
            let result = match block {
                Block::Paragraph(t) => Ok(ResolvedBlock::Paragraph(t.clone())),
                Block::Heading { level, text } => Ok(ResolvedBlock::Heading { level: *level, text: text.clone() }),
                Block::Figure { image_ref, caption } => {
                    figures += 1;
                    resolve_figure(figures, image_ref, caption, &opts.asset_dir)
                }
                Block::MiniMap { query, caption } => {
                    maps += 1;
                    resolve_map(MapKind::Mini, maps, query, caption, index, manifest, zones, opts)
                }
                Block::MasterMap { query } => {
                    maps += 1;
                    resolve_map(MapKind::Master, maps, query, "", index, manifest, zones, opts)
                }
            };
            result.unwrap_or_else(|reason| ResolvedBlock::Failed { source: block.clone(), reason })
        })
        .collect();
    ResolvedDoc {
        article_id: doc.article_id.clone(),
        title: doc.title.clone(),
        authors: doc.authors.clone(),
        canonical_url: doc.canonical_url.clone(),
        blocks,
    }
}

fn resolve_figure(number: usize, image_ref: &str, caption: &str, asset_dir: &Path) -> Result<ResolvedBlock, String> {
    if image_ref.contains("://") {
        return Err(format!("figure {image_ref:?} must be a local file"));
    }
    let (extension, media_type) =
        image_type(image_ref).ok_or_else(|| format!("figure {image_ref:?} has an unsupported image type"))?;
    let bytes = std::fs::read(asset_dir.join(image_ref)).map_err(|e| format!("figure {image_ref:?}: {e}"))?;
    Ok(ResolvedBlock::Figure(FigureEmbed { number, caption: caption.to_string(), extension, media_type, bytes }))
}

#[allow(clippy::too_many_arguments)]
fn resolve_map(
    kind: MapKind,
    number: usize,
    query: &str,
    caption: &str,
    index: &FacetIndex,
    manifest: &DatasetManifest,
    zones: Option<&ZoneRaster>,
    opts: &ResolveOptions,
) -> Result<ResolvedBlock, String> {
    if query.split('&').any(|p| p.starts_with("page=") || p.starts_with("per_page=")) {
        return Err("map queries cannot carry page or per_page".into());
    }
    let (filters, _) = FilterSet::parse_query(query).map_err(|e| e.to_string())?;
    let page = index.query_all(&filters).map_err(|e| e.to_string())?;
    let mut records = Vec::with_capacity(page.matches.len());
    let mut points = Vec::with_capacity(page.matches.len());
    for id in &page.matches {
        let doc = index.get(id).ok_or_else(|| format!("record {id} vanished from the index"))?;
        let f = &doc.feature;
        let uri = manifest.record_uri(id).map_err(|e| e.to_string())?;
        records.push(RecordLink {
            id: id.clone(),
            uri,
            label: format!("{}, {} ({})", f.tomb_type, f.locus_name, doc.affiliation),
        });
        points.push((f.location, doc.affiliation));
    }
    let png = render_static_map(&points, zones);
    Ok(ResolvedBlock::Map(Box::new(MapEmbed {
        kind,
        number,
        caption: caption.to_string(),
        feed_url: feed_url(&opts.service_url, &filters),
        filters,
        page,
        records,
        png,
    })))
}
