//! Article exports: web HTML, print-ready HTML with QR codes, and epub.

mod epub;
mod html;
mod narrative;
mod resolve;
mod staticmap;
mod zipw;

use std::collections::BTreeMap;
use std::io;
use std::path::Path;

use thiserror::Error;

pub use epub::{export_epub, EpubPackage, EPUB_MIMETYPE};
pub use html::{export_html, export_print};
pub use narrative::{Block, NarrativeDoc, NarrativeError};
pub use resolve::{
    feed_url, resolve_embeds, BlockError, FigureEmbed, MapEmbed, MapKind, RecordLink, ResolveOptions, ResolvedBlock,
    ResolvedDoc,
};
pub use staticmap::render_static_map;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExportError {
    #[error("{} block(s) failed: {}", .0.len(), list(.0))]
    Blocks(Vec<BlockError>),
    #[error("canonical_url is required for print export")]
    MissingCanonicalUrl,
}

fn list(errors: &[BlockError]) -> String {
    errors.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

fn require_resolved(doc: &ResolvedDoc) -> Result<(), ExportError> {
    let errors = doc.errors();
    if errors.is_empty() {
        Ok(())
    } else {
        Err(ExportError::Blocks(errors))
    }
}

/// In-memory output tree keyed by relative path.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExportTree {
    pub files: BTreeMap<String, Vec<u8>>,
}

impl ExportTree {
    pub fn insert(&mut self, path: impl Into<String>, bytes: impl Into<Vec<u8>>) {
        self.files.insert(path.into(), bytes.into());
    }

    pub fn get(&self, path: &str) -> Option<&[u8]> {
        self.files.get(path).map(Vec::as_slice)
    }

    pub fn write_to(&self, dir: &Path) -> io::Result<()> {
        for (rel, bytes) in &self.files {
            let path = dir.join(rel);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(path, bytes)?;
        }
        Ok(())
    }
}
