//! Boilerplate removal, tokenization and per-document term statistics.
//!
//! Removal rules:
//! - content of `script`, `style`, `noscript`, `template` and `head` is dropped;
//! - `nav`, `header`, `footer` and `aside` elements are dropped, as is any
//!   element whose `role` is `navigation`, `banner` or `contentinfo`;
//! - the remaining text is split into blocks at block-level element
//!   boundaries, and whitespace inside each block is collapsed.

mod doc;
pub mod html;
mod tokenize;

use std::ops::Range;

pub use doc::{build_extracted_doc, ContentHash, ExtractedDoc, TextBlock};
pub use tokenize::tokenize;

use html::{lex, HtmlToken, VOID};

const HIDDEN_TAGS: &[&str] = &["script", "style", "noscript", "template", "head", "nav", "header", "footer", "aside"];
const HIDDEN_ROLES: &[&str] = &["navigation", "banner", "contentinfo"];

const BLOCK_TAGS: &[&str] = &[
    "address", "article", "aside", "blockquote", "body", "br", "caption", "center", "dd", "details", "dialog", "dir",
    "div", "dl", "dt", "fieldset", "figcaption", "figure", "footer", "form", "h1", "h2", "h3", "h4", "h5", "h6",
    "header", "hgroup", "hr", "html", "legend", "li", "main", "menu", "nav", "ol", "option", "p", "pre", "section",
    "summary", "table", "tbody", "td", "tfoot", "th", "thead", "title", "tr", "ul",
];

fn is_hidden(name: &str, attrs: &[(String, String)]) -> bool {
    HIDDEN_TAGS.contains(&name)
        || attrs
            .iter()
            .any(|(k, v)| k == "role" && HIDDEN_ROLES.iter().any(|r| v.trim().eq_ignore_ascii_case(r)))
}

/// A run of visible source text. `block` increases at every block boundary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisibleSegment {
    pub span: Range<usize>,
    pub block: usize,
}

/// Walks the markup and reports visible text runs, plus the spans of
/// `script` elements (start tag through end tag).
pub fn visible_segments(src: &str) -> (Vec<VisibleSegment>, Vec<Range<usize>>) {
    let mut stack: Vec<(String, bool)> = Vec::new();
    let mut hidden_depth = 0usize;
    let mut block = 0usize;
    let mut segments = Vec::new();
    let mut scripts = Vec::new();
    let mut script_start: Option<usize> = None;

    for tok in lex(src) {
        match tok {
            HtmlToken::Text(span) => {
                if hidden_depth == 0 {
                    segments.push(VisibleSegment { span, block });
                }
            }
            HtmlToken::StartTag { name, attrs, self_closing, span } => {
                if BLOCK_TAGS.contains(&name.as_str()) {
                    block += 1;
                }
                if name == "script" {
                    if self_closing {
                        scripts.push(span.clone());
                    } else {
                        script_start = Some(span.start);
                    }
                }
                if name == "body" {
                    // an unclosed <head> ends where the body starts
                    while let Some(i) = stack.iter().rposition(|(n, _)| n == "head") {
                        for (_, hidden) in stack.drain(i..) {
                            hidden_depth -= usize::from(hidden);
                        }
                    }
                }
                if self_closing || VOID.contains(&name.as_str()) {
                    continue;
                }
                let hidden = is_hidden(&name, &attrs);
                hidden_depth += usize::from(hidden);
                stack.push((name, hidden));
            }
            HtmlToken::EndTag { name, span } => {
                if BLOCK_TAGS.contains(&name.as_str()) {
                    block += 1;
                }
                if name == "script" {
                    if let Some(start) = script_start.take() {
                        scripts.push(start..span.end);
                    }
                }
                if let Some(i) = stack.iter().rposition(|(n, _)| *n == name) {
                    for (_, hidden) in stack.drain(i..) {
                        hidden_depth -= usize::from(hidden);
                    }
                }
            }
            HtmlToken::Other(_) => {}
        }
    }
    if let Some(start) = script_start {
        scripts.push(start..src.len());
    }
    (segments, scripts)
}

/// Visible text of an HTML document as whitespace-normalized blocks.
pub fn extract_text(html: &[u8]) -> Vec<String> {
    let src = String::from_utf8_lossy(html);
    let (segments, _) = visible_segments(&src);
    let mut blocks = Vec::new();
    let mut current = String::new();
    let mut current_block = None;
    for seg in segments {
        if current_block != Some(seg.block) {
            push_block(&mut blocks, &current);
            current.clear();
            current_block = Some(seg.block);
        }
        current.push_str(&html_escape::decode_html_entities(&src[seg.span]));
    }
    push_block(&mut blocks, &current);
    blocks
}

fn push_block(blocks: &mut Vec<String>, raw: &str) {
    let normalized = raw.split_whitespace().collect::<Vec<_>>().join(" ");
    if !normalized.is_empty() {
        blocks.push(normalized);
    }
}
