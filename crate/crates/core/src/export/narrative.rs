//! Plain-text narrative source.
//!
//! ```text
//! title: Funerary monuments of the western survey
//! article_id: rc-funerary
//! authors: A. Author; B. Author
//! canonical_url: https://example.org/articles/rc-funerary
//!
//! # Heading
//!
//! Paragraph text, possibly wrapped
//! over several lines.
//!
//! ![Plan of the necropolis](figures/plan.png)
//!
//! ::: minimap tomb_type=RockCut&context=IsolatedNecropolis
//! Rock-cut tombs at necropolis sites
//! :::
//!
//! ::: mastermap
//! :::
//! ```
//!
//! Map directives carry the same query string the HTTP search endpoint
//! accepts.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NarrativeError {
    #[error("missing header field {0}")]
    MissingField(&'static str),
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("at most one mastermap block is allowed")]
    MultipleMasterMaps,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Block {
    Paragraph(String),
    Heading { level: u8, text: String },
    Figure { image_ref: String, caption: String },
    /// Inline map of a query result; `query` uses the search grammar.
    MiniMap { query: String, caption: String },
    /// The article-level map; at most one per document.
    MasterMap { query: String },
}

impl Block {
    pub fn is_map(&self) -> bool {
        matches!(self, Block::MiniMap { .. } | Block::MasterMap { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NarrativeDoc {
    pub article_id: String,
    pub title: String,
    pub authors: Vec<String>,
    pub canonical_url: Option<String>,
    pub body: Vec<Block>,
}

impl NarrativeDoc {
    pub fn parse(text: &str) -> Result<Self, NarrativeError> {
        let lines: Vec<&str> = text.lines().collect();
        let mut i = 0;
        let (mut title, mut article_id, mut authors, mut canonical_url) = (None, None, Vec::new(), None);
        while i < lines.len() && !lines[i].trim().is_empty() {
            let line = lines[i];
            let (key, value) = line.split_once(':').ok_or_else(|| NarrativeError::Syntax {
                line: i + 1,
                reason: "expected `key: value` header".into(),
            })?;
            let value = value.trim().to_string();
            match key.trim() {
                "title" => title = Some(value),
                "article_id" => article_id = Some(value),
                "authors" => {
                    authors = value
                        .split(';')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(String::from)
                        .collect()
                }
                "canonical_url" => canonical_url = (!value.is_empty()).then_some(value),
                other => {
                    return Err(NarrativeError::Syntax {
                        line: i + 1,
                        reason: format!("unknown header field {other:?}"),
                    })
                }
            }
            i += 1;
        }
        let title = title.ok_or(NarrativeError::MissingField("title"))?;
        let article_id = article_id.ok_or(NarrativeError::MissingField("article_id"))?;
        if article_id.is_empty() || !article_id.bytes().all(|c| c.is_ascii_alphanumeric() || c == b'-' || c == b'_') {
            return Err(NarrativeError::Syntax {
                line: 1,
                reason: format!("article_id {article_id:?} must be alphanumeric, '-' or '_'"),
            });
        }

        let mut body = Vec::new();
        let mut paragraph: Vec<&str> = Vec::new();
        let flush = |paragraph: &mut Vec<&str>, body: &mut Vec<Block>| {
            if !paragraph.is_empty() {
                body.push(Block::Paragraph(paragraph.join(" ")));
                paragraph.clear();
            }
        };
        while i < lines.len() {
            let line = lines[i].trim();
            i += 1;
            if line.is_empty() {
                flush(&mut paragraph, &mut body);
            } else if let Some(rest) = line.strip_prefix(":::") {
                flush(&mut paragraph, &mut body);
                let start = i;
                let rest = rest.trim();
                let (kind, query) = rest.split_once(' ').unwrap_or((rest, ""));
                let mut caption = Vec::new();
                loop {
                    match lines.get(i).map(|l| l.trim()) {
                        Some(":::") => {
                            i += 1;
                            break;
                        }
                        Some(l) => {
                            caption.push(l);
                            i += 1;
                        }
                        None => {
                            return Err(NarrativeError::Syntax {
                                line: start,
                                reason: "unterminated ::: directive".into(),
                            })
                        }
                    }
                }
                let query = query.trim().to_string();
                match kind {
                    "minimap" => body.push(Block::MiniMap { query, caption: caption.join(" ") }),
                    "mastermap" => body.push(Block::MasterMap { query }),
                    other => {
                        return Err(NarrativeError::Syntax {
                            line: start,
                            reason: format!("unknown directive {other:?}"),
                        })
                    }
                }
            } else if line.starts_with('#') {
                flush(&mut paragraph, &mut body);
                let level = line.bytes().take_while(|&c| c == b'#').count();
                if level > 6 {
                    return Err(NarrativeError::Syntax { line: i, reason: "heading level above 6".into() });
                }
                body.push(Block::Heading { level: level as u8, text: line[level..].trim().to_string() });
            } else if let Some(rest) = line.strip_prefix("![") {
                flush(&mut paragraph, &mut body);
                let bad = || NarrativeError::Syntax { line: i, reason: "expected ![caption](image)".into() };
                let (caption, rest) = rest.split_once("](").ok_or_else(bad)?;
                let image_ref = rest.strip_suffix(')').ok_or_else(bad)?;
                body.push(Block::Figure { image_ref: image_ref.to_string(), caption: caption.to_string() });
            } else {
                paragraph.push(line);
            }
        }
        flush(&mut paragraph, &mut body);

        if body.iter().filter(|b| matches!(b, Block::MasterMap { .. })).count() > 1 {
            return Err(NarrativeError::MultipleMasterMaps);
        }
        Ok(NarrativeDoc { article_id, title, authors, canonical_url, body })
    }

    /// Directive text for a map block, as accepted by [`parse`](Self::parse).
    pub fn minimap_directive(query: &str, caption: &str) -> String {
        format!("::: minimap {query}\n{caption}\n:::\n")
    }
}
