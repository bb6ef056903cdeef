use std::fmt::Write;

use chrono::{DateTime, Utc};

use super::html::{add_images, body, Mode, BASE_CSS};
use super::zipw::StoredZip;
use super::{require_resolved, ExportError, ExportTree, ResolvedDoc};
use crate::feeds::xml_escape as esc;

pub const EPUB_MIMETYPE: &str = "application/epub+zip";

const CONTAINER_XML: &str = r#"<?xml version="1.0" encoding="UTF-8"?>
<container version="1.0" xmlns="urn:oasis:names:tc:opendocument:xmlns:container">
<rootfiles>
<rootfile full-path="OEBPS/content.opf" media-type="application/oebps-package+xml"/>
</rootfiles>
</container>
"#;

/// An epub 2 OCF container.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpubPackage {
    pub bytes: Vec<u8>,
}

fn media_type(path: &str) -> &'static str {
    match path.rsplit('.').next() {
        Some("png") => "image/png",
        Some("jpg") => "image/jpeg",
        Some("gif") => "image/gif",
        Some("svg") => "image/svg+xml",
        _ => "application/octet-stream",
    }
}

fn identifier(doc: &ResolvedDoc) -> String {
    doc.canonical_url
        .clone()
        .unwrap_or_else(|| format!("urn:geopub:article:{}", doc.article_id))
}

fn content_opf(doc: &ResolvedDoc, images: &[&String], built: &DateTime<Utc>) -> String {
    let mut s = String::from(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<package xmlns=\"http://www.idpf.org/2007/opf\" version=\"2.0\" unique-identifier=\"bookid\">\n<metadata xmlns:dc=\"http://purl.org/dc/elements/1.1/\" xmlns:opf=\"http://www.idpf.org/2007/opf\">\n",
    );
    let _ = writeln!(s, "<dc:title>{}</dc:title>", esc(&doc.title));
    for a in &doc.authors {
        let _ = writeln!(s, "<dc:creator opf:role=\"aut\">{}</dc:creator>", esc(a));
    }
    s.push_str("<dc:language>en</dc:language>\n");
    let _ = writeln!(s, "<dc:identifier id=\"bookid\">{}</dc:identifier>", esc(&identifier(doc)));
    let _ = writeln!(s, "<dc:date>{}</dc:date>", built.format("%Y-%m-%d"));
    s.push_str("</metadata>\n<manifest>\n");
    s.push_str("<item id=\"ncx\" href=\"toc.ncx\" media-type=\"application/x-dtbncx+xml\"/>\n");
    s.push_str("<item id=\"article\" href=\"article.xhtml\" media-type=\"application/xhtml+xml\"/>\n");
    s.push_str("<item id=\"style\" href=\"style.css\" media-type=\"text/css\"/>\n");
    for (i, path) in images.iter().enumerate() {
        let _ = writeln!(s, "<item id=\"img{}\" href=\"{}\" media-type=\"{}\"/>", i + 1, esc(path), media_type(path));
    }
    s.push_str("</manifest>\n<spine toc=\"ncx\">\n<itemref idref=\"article\"/>\n</spine>\n</package>\n");
    s
}

fn toc_ncx(doc: &ResolvedDoc) -> String {
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<ncx xmlns=\"http://www.daisy.org/z3986/2005/ncx/\" version=\"2005-1\">\n<head>\n<meta name=\"dtb:uid\" content=\"{id}\"/>\n<meta name=\"dtb:depth\" content=\"1\"/>\n<meta name=\"dtb:totalPageCount\" content=\"0\"/>\n<meta name=\"dtb:maxPageNumber\" content=\"0\"/>\n</head>\n<docTitle><text>{title}</text></docTitle>\n<navMap>\n<navPoint id=\"article\" playOrder=\"1\">\n<navLabel><text>{title}</text></navLabel>\n<content src=\"article.xhtml\"/>\n</navPoint>\n</navMap>\n</ncx>\n",
        id = esc(&identifier(doc)),
        title = esc(&doc.title)
    )
}

fn article_xhtml(doc: &ResolvedDoc) -> String {
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<!DOCTYPE html PUBLIC \"-//W3C//DTD XHTML 1.1//EN\" \"http://www.w3.org/TR/xhtml11/DTD/xhtml11.dtd\">\n<html xmlns=\"http://www.w3.org/1999/xhtml\" xml:lang=\"en\">\n<head>\n<title>{}</title>\n<link rel=\"stylesheet\" type=\"text/css\" href=\"style.css\"/>\n</head>\n<body>\n{}</body>\n</html>\n",
        esc(&doc.title),
        body(doc, Mode::Epub)
    )
}

/// Packages the article as a single-spine epub 2 book. Entries are stamped
/// with `built`, so equal inputs give equal bytes.
pub fn export_epub(doc: &ResolvedDoc, built: &DateTime<Utc>) -> Result<EpubPackage, ExportError> {
    require_resolved(doc)?;
    let mut images = ExportTree::default();
    add_images(doc, &mut images, "");
    let image_paths: Vec<&String> = images.files.keys().collect();

    let mut zip = StoredZip::new(built);
    zip.add("mimetype", EPUB_MIMETYPE.as_bytes());
    zip.add("META-INF/container.xml", CONTAINER_XML.as_bytes());
    zip.add("OEBPS/content.opf", content_opf(doc, &image_paths, built).as_bytes());
    zip.add("OEBPS/toc.ncx", toc_ncx(doc).as_bytes());
    zip.add("OEBPS/article.xhtml", article_xhtml(doc).as_bytes());
    zip.add("OEBPS/style.css", BASE_CSS.as_bytes());
    for (path, bytes) in &images.files {
        zip.add(&format!("OEBPS/{path}"), bytes);
    }
    Ok(EpubPackage { bytes: zip.finish() })
}
