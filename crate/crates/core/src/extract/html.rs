//! A lenient HTML lexer that keeps byte spans, so callers can both read the
//! visible text and rewrite the original markup in place.

use std::ops::Range;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HtmlToken {
    Text(Range<usize>),
    StartTag {
        name: String,
        attrs: Vec<(String, String)>,
        self_closing: bool,
        span: Range<usize>,
    },
    EndTag {
        name: String,
        span: Range<usize>,
    },
    /// Comments, doctypes, processing instructions, CDATA.
    Other(Range<usize>),
}

impl HtmlToken {
    pub fn span(&self) -> Range<usize> {
        match self {
            HtmlToken::Text(s) | HtmlToken::Other(s) => s.clone(),
            HtmlToken::StartTag { span, .. } | HtmlToken::EndTag { span, .. } => span.clone(),
        }
    }
}

const RAW_TEXT: &[&str] = &["script", "style", "textarea", "title", "noscript", "xmp", "iframe", "noembed", "noframes"];

pub const VOID: &[&str] = &[
    "area", "base", "br", "col", "embed", "hr", "img", "input", "link", "meta", "param", "source", "track", "wbr",
];

pub fn lex(src: &str) -> Vec<HtmlToken> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut pos = 0;
    let mut text_start = 0;

    let flush_text = |out: &mut Vec<HtmlToken>, from: usize, to: usize| {
        if to > from {
            out.push(HtmlToken::Text(from..to));
        }
    };

    while pos < bytes.len() {
        if bytes[pos] != b'<' {
            pos += 1;
            continue;
        }
        let rest = &bytes[pos..];
        if rest.starts_with(b"<!--") {
            flush_text(&mut out, text_start, pos);
            let end = find(bytes, pos + 4, b"-->").map_or(bytes.len(), |i| i + 3);
            out.push(HtmlToken::Other(pos..end));
            pos = end;
            text_start = pos;
        } else if rest.starts_with(b"<!") || rest.starts_with(b"<?") {
            flush_text(&mut out, text_start, pos);
            let end = if rest.starts_with(b"<![CDATA[") {
                find(bytes, pos, b"]]>").map_or(bytes.len(), |i| i + 3)
            } else {
                find(bytes, pos, b">").map_or(bytes.len(), |i| i + 1)
            };
            out.push(HtmlToken::Other(pos..end));
            pos = end;
            text_start = pos;
        } else if rest.len() > 2 && rest[1] == b'/' && rest[2].is_ascii_alphabetic() {
            flush_text(&mut out, text_start, pos);
            let (name, after_name) = read_name(bytes, pos + 2);
            let end = find(bytes, after_name, b">").map_or(bytes.len(), |i| i + 1);
            out.push(HtmlToken::EndTag { name, span: pos..end });
            pos = end;
            text_start = pos;
        } else if rest.len() > 1 && rest[1].is_ascii_alphabetic() {
            flush_text(&mut out, text_start, pos);
            let (name, attrs, self_closing, end) = read_start_tag(src, pos);
            let raw = RAW_TEXT.contains(&name.as_str()) && !self_closing;
            out.push(HtmlToken::StartTag { name: name.clone(), attrs, self_closing, span: pos..end });
            pos = end;
            text_start = pos;
            if raw {
                let close = find_close_tag(bytes, pos, &name).unwrap_or(bytes.len());
                flush_text(&mut out, pos, close);
                pos = close;
                text_start = pos;
            }
        } else {
            pos += 1;
        }
    }
    flush_text(&mut out, text_start, bytes.len());
    out
}

fn find(hay: &[u8], from: usize, needle: &[u8]) -> Option<usize> {
    if from >= hay.len() {
        return None;
    }
    hay[from..].windows(needle.len()).position(|w| w == needle).map(|i| i + from)
}

fn find_close_tag(bytes: &[u8], from: usize, name: &str) -> Option<usize> {
    let mut i = from;
    while let Some(lt) = find(bytes, i, b"</") {
        let cand = &bytes[lt + 2..];
        if cand.len() >= name.len()
            && cand[..name.len()].eq_ignore_ascii_case(name.as_bytes())
            && cand.get(name.len()).is_none_or(|b| b.is_ascii_whitespace() || *b == b'>' || *b == b'/')
        {
            return Some(lt);
        }
        i = lt + 2;
    }
    None
}

fn read_name(bytes: &[u8], mut pos: usize) -> (String, usize) {
    let start = pos;
    while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() && bytes[pos] != b'>' && bytes[pos] != b'/' {
        pos += 1;
    }
    (String::from_utf8_lossy(&bytes[start..pos]).to_ascii_lowercase(), pos)
}

fn read_start_tag(src: &str, start: usize) -> (String, Vec<(String, String)>, bool, usize) {
    let bytes = src.as_bytes();
    let (name, mut pos) = read_name(bytes, start + 1);
    let mut attrs = Vec::new();
    let mut self_closing = false;
    loop {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos >= bytes.len() {
            return (name, attrs, self_closing, bytes.len());
        }
        match bytes[pos] {
            b'>' => return (name, attrs, self_closing, pos + 1),
            b'/' => {
                pos += 1;
                if bytes.get(pos) == Some(&b'>') {
                    self_closing = true;
                }
                continue;
            }
            _ => {}
        }
        let key_start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() && !matches!(bytes[pos], b'=' | b'>' | b'/') {
            pos += 1;
        }
        if pos == key_start {
            // stray '=' or similar
            pos += 1;
            continue;
        }
        let key = src[key_start..pos].to_ascii_lowercase();
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let mut value = String::new();
        if bytes.get(pos) == Some(&b'=') {
            pos += 1;
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            match bytes.get(pos) {
                Some(&q) if q == b'"' || q == b'\'' => {
                    let close = bytes[pos + 1..].iter().position(|b| *b == q).map_or(bytes.len(), |i| pos + 1 + i);
                    value = src[pos + 1..close].to_string();
                    pos = (close + 1).min(bytes.len());
                }
                _ => {
                    let v_start = pos;
                    while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() && bytes[pos] != b'>' {
                        pos += 1;
                    }
                    value = src[v_start..pos].to_string();
                }
            }
        }
        attrs.push((key, html_escape::decode_html_entities(&value).into_owned()));
    }
}
