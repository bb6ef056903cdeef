use std::fmt::Write;

use super::resolve::{MapEmbed, MapKind, ResolvedBlock, ResolvedDoc};
use super::{require_resolved, BlockError, ExportError, ExportTree};
use crate::feeds::xml_escape as esc;
use crate::qr::{encode_qr, render_qr_png, EccLevel};

const QR_MODULE_PX: usize = 4;

pub(super) const BASE_CSS: &str = "body { font-family: Georgia, serif; line-height: 1.5; margin: 0 auto; max-width: 46em; padding: 1em; }
.authors { font-style: italic; }
.map img.static { max-width: 100%; height: auto; border: 1px solid #999; }
.figure img { max-width: 100%; height: auto; }
.caption { font-size: 0.9em; }
ol.records { font-size: 0.85em; }
";

const PRINT_CSS: &str = "@page { size: A4; margin: 20mm; }
body { font-family: Georgia, serif; line-height: 1.4; width: 170mm; margin: 0; }
.authors { font-style: italic; }
.map, .figure { page-break-inside: avoid; }
.map img.static { width: 120mm; border: 0.3mm solid #666; }
.figure img { max-width: 170mm; }
img.code { width: 28mm; height: 28mm; float: right; margin-left: 4mm; }
.caption { font-size: 9pt; }
ol.records { font-size: 8pt; column-count: 2; }
a { color: inherit; text-decoration: none; }
";

#[derive(Clone, Copy, PartialEq, Eq)]
pub(super) enum Mode {
    Web,
    Print,
    Epub,
}

pub(super) fn header(doc: &ResolvedDoc, mode: Mode) -> String {
    let mut s = String::new();
    s.push_str("<div class=\"header\">\n");
    if mode == Mode::Print {
        s.push_str("<img class=\"code\" src=\"codes/header.png\" alt=\"QR code for this article\"/>\n");
    }
    let _ = writeln!(s, "<h1>{}</h1>", esc(&doc.title));
    if !doc.authors.is_empty() {
        let _ = writeln!(s, "<p class=\"authors\">{}</p>", esc(&doc.authors.join(", ")));
    }
    if let Some(url) = &doc.canonical_url {
        let _ = writeln!(s, "<p class=\"canonical\"><a href=\"{0}\">{0}</a></p>", esc(url));
    }
    s.push_str("</div>\n");
    s
}

fn map_section(m: &MapEmbed, mode: Mode) -> String {
    let mut s = String::new();
    let class = match m.kind {
        MapKind::Mini => "minimap",
        MapKind::Master => "mastermap",
    };
    let feed = esc(&m.feed_url);
    let _ = writeln!(s, "<div class=\"map {class}\" id=\"map-{}\">", m.number);
    if mode == Mode::Print {
        let _ = writeln!(
            s,
            "<img class=\"code\" src=\"codes/map-{}.png\" alt=\"QR code for the live data feed\"/>",
            m.number
        );
    }
    let alt = if m.caption.is_empty() { format!("Map {}", m.number) } else { m.caption.clone() };
    let _ = writeln!(
        s,
        "<a href=\"{feed}\"><img class=\"static\" src=\"{}\" alt=\"{}\"/></a>",
        m.image_path(),
        esc(&alt)
    );
    if !m.caption.is_empty() {
        let _ = writeln!(s, "<p class=\"caption\">{}</p>", esc(&m.caption));
    }
    let noun = if m.page.total == 1 { "record" } else { "records" };
    let _ = writeln!(
        s,
        "<p class=\"feed\">{} {noun}. <a href=\"{feed}\">Live data (GeoJSON)</a></p>",
        m.page.total
    );
    if !m.records.is_empty() {
        s.push_str("<ol class=\"records\">\n");
        for r in &m.records {
            let _ = writeln!(s, "<li><a href=\"{}\">{}</a> {}</li>", esc(&r.uri), esc(&r.id), esc(&r.label));
        }
        s.push_str("</ol>\n");
    }
    s.push_str("</div>\n");
    s
}

pub(super) fn body(doc: &ResolvedDoc, mode: Mode) -> String {
    let mut s = header(doc, mode);
    for block in &doc.blocks {
        match block {
            ResolvedBlock::Heading { level, text } => {
                let h = (*level + 1).min(6);
                let _ = writeln!(s, "<h{h}>{}</h{h}>", esc(text));
            }
            ResolvedBlock::Paragraph(text) => {
                let _ = writeln!(s, "<p>{}</p>", esc(text));
            }
            ResolvedBlock::Figure(f) => {
                let _ = writeln!(
                    s,
                    "<div class=\"figure\"><img src=\"{}\" alt=\"{1}\"/><p class=\"caption\">{1}</p></div>",
                    f.image_path(),
                    esc(&f.caption)
                );
            }
            ResolvedBlock::Map(m) => s.push_str(&map_section(m, mode)),
            ResolvedBlock::Failed { .. } => {}
        }
    }
    s
}

fn page(doc: &ResolvedDoc, mode: Mode, css: &str) -> String {
    format!(
        "<!DOCTYPE html>\n<html xmlns=\"http://www.w3.org/1999/xhtml\" lang=\"en\">\n<head>\n<meta charset=\"utf-8\"/>\n<title>{}</title>\n<style>\n{css}</style>\n</head>\n<body>\n{}</body>\n</html>\n",
        esc(&doc.title),
        body(doc, mode)
    )
}

pub(super) fn add_images(doc: &ResolvedDoc, tree: &mut ExportTree, prefix: &str) {
    for m in doc.maps() {
        tree.insert(format!("{prefix}{}", m.image_path()), m.png.clone());
    }
    for f in doc.figures() {
        tree.insert(format!("{prefix}{}", f.image_path()), f.bytes.clone());
    }
}

/// Web page: `index.html` plus `maps/<n>.png` and `figures/<n>.<ext>`.
pub fn export_html(doc: &ResolvedDoc) -> Result<ExportTree, ExportError> {
    require_resolved(doc)?;
    let mut tree = ExportTree::default();
    tree.insert("index.html", page(doc, Mode::Web, BASE_CSS));
    add_images(doc, &mut tree, "");
    Ok(tree)
}

fn qr_png(text: &str) -> Result<Vec<u8>, String> {
    let m = encode_qr(text, EccLevel::M).map_err(|e| e.to_string())?;
    render_qr_png(&m, QR_MODULE_PX, crate::qr::DEFAULT_QUIET_MODULES).map_err(|e| e.to_string())
}

/// Print-ready page with a QR code on the header (canonical URL) and on
/// each map block (live feed URL). Blocks whose URL does not fit a code are
/// reported together.
pub fn export_print(doc: &ResolvedDoc) -> Result<ExportTree, ExportError> {
    let canonical = doc.canonical_url.as_deref().ok_or(ExportError::MissingCanonicalUrl)?;
    require_resolved(doc)?;
    let mut tree = ExportTree::default();
    let mut errors = Vec::new();
    match qr_png(canonical) {
        Ok(png) => tree.insert("codes/header.png", png),
        Err(reason) => errors.push(BlockError { block: 0, reason: format!("header code: {reason}") }),
    }
    for (i, block) in doc.blocks.iter().enumerate() {
        if let ResolvedBlock::Map(m) = block {
            match qr_png(&m.feed_url) {
                Ok(png) => tree.insert(format!("codes/map-{}.png", m.number), png),
                Err(reason) => errors.push(BlockError { block: i + 1, reason }),
            }
        }
    }
    if !errors.is_empty() {
        return Err(ExportError::Blocks(errors));
    }
    tree.insert("index.html", page(doc, Mode::Print, PRINT_CSS));
    add_images(doc, &mut tree, "");
    Ok(tree)
}
