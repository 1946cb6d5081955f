use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{parse_memento_datetime, ts14};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TimeMapError {
    #[error("malformed link-format: {0}")]
    MalformedLinkFormat(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TimeMapEntry {
    pub uri_m: String,
    #[serde(with = "ts14")]
    pub capture_datetime: DateTime<Utc>,
    /// Host of `uri_m`.
    pub source_archive: String,
    pub rels: Vec<String>,
}

fn malformed(msg: impl Into<String>) -> TimeMapError {
    TimeMapError::MalformedLinkFormat(msg.into())
}

/// Splits on `sep` outside angle brackets and double quotes.
fn split_outside(s: &str, sep: char) -> Vec<&str> {
    let mut parts = Vec::new();
    let (mut in_uri, mut in_quote, mut start) = (false, false, 0);
    for (i, c) in s.char_indices() {
        match c {
            '"' if !in_uri => in_quote = !in_quote,
            '<' if !in_quote => in_uri = true,
            '>' if !in_quote => in_uri = false,
            c if c == sep && !in_uri && !in_quote => {
                parts.push(&s[start..i]);
                start = i + c.len_utf8();
            }
            _ => {}
        }
    }
    parts.push(&s[start..]);
    parts
}

/// Memento entries of an `application/link-format` TimeMap, sorted by
/// datetime. Links without a `memento` relation are skipped.
pub fn parse_timemap(body: &str) -> Result<Vec<TimeMapEntry>, TimeMapError> {
    let mut out = Vec::new();
    for link in split_outside(body, ',') {
        let link = link.trim();
        if link.is_empty() {
            continue;
        }
        let rest = link.strip_prefix('<').ok_or_else(|| malformed(format!("expected '<' in {link:?}")))?;
        let close = rest.find('>').ok_or_else(|| malformed(format!("unterminated URI in {link:?}")))?;
        let uri = rest[..close].trim();
        let mut rels = Vec::new();
        let mut datetime = None;
        for param in split_outside(&rest[close + 1..], ';').into_iter().skip(1) {
            let param = param.trim();
            if param.is_empty() {
                continue;
            }
            let (name, value) = param.split_once('=').ok_or_else(|| malformed(format!("bad parameter {param:?}")))?;
            let value = value.trim();
            let value = match value.strip_prefix('"') {
                Some(v) => v.strip_suffix('"').ok_or_else(|| malformed(format!("unterminated quote in {param:?}")))?,
                None => value,
            };
            match name.trim().to_ascii_lowercase().as_str() {
                "rel" => rels = value.split_whitespace().map(str::to_ascii_lowercase).collect(),
                "datetime" => datetime = Some(value.to_string()),
                _ => {}
            }
        }
        if !rels.iter().any(|r| r == "memento") {
            continue;
        }
        let dt = datetime.ok_or_else(|| malformed(format!("memento without datetime: {uri}")))?;
        let capture_datetime = parse_memento_datetime(&dt).map_err(|_| malformed(format!("bad datetime {dt:?}")))?;
        let parsed = url::Url::parse(uri).map_err(|_| malformed(format!("URI-M is not absolute: {uri:?}")))?;
        out.push(TimeMapEntry {
            uri_m: uri.to_string(),
            capture_datetime,
            source_archive: parsed.host_str().unwrap_or_default().to_ascii_lowercase(),
            rels,
        });
    }
    out.sort_by_key(|e| e.capture_datetime);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    #[test]
    fn single_memento() {
        let body = r#"<http://web.archive.org/web/20160404000000/http://example.org/>; rel="memento"; datetime="Mon, 04 Apr 2016 00:00:00 GMT""#;
        let e = parse_timemap(body).unwrap();
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].capture_datetime, Utc.with_ymd_and_hms(2016, 4, 4, 0, 0, 0).unwrap());
        assert_eq!(e[0].source_archive, "web.archive.org");
    }

    #[test]
    fn only_non_memento_links() {
        let body = "<http://example.org/>; rel=\"original\",\n<http://tm.example/timemap/link/http://example.org/>; rel=\"self\"; type=\"application/link-format\"";
        assert!(parse_timemap(body).unwrap().is_empty());
    }

    #[test]
    fn shuffled_five_entries() {
        let body = r#"<http://example.org/>; rel="original",
<http://a.example/20200215000000/http://example.org/>; rel="memento"; datetime="Sat, 15 Feb 2020 00:00:00 GMT",
<http://b.example/20160301120000/http://example.org/>; rel="first memento"; datetime="Tue, 01 Mar 2016 12:00:00 GMT",
<http://a.example/20180101000000/http://example.org/?a=1,2>; rel="memento"; datetime="Mon, 01 Jan 2018 00:00:00 GMT",
<http://c.example/20200601000000/http://example.org/>; rel="last memento"; datetime="Mon, 01 Jun 2020 00:00:00 GMT",
<http://b.example/20160501000000/http://example.org/>; rel="memento"; datetime="Sun, 01 May 2016 00:00:00 GMT""#;
        let e = parse_timemap(body).unwrap();
        let got: Vec<(String, &str)> = e.iter().map(|x| (x.capture_datetime.format("%Y%m%d%H").to_string(), x.source_archive.as_str())).collect();
        let want = [("2016030112", "b.example"), ("2016050100", "b.example"), ("2018010100", "a.example"), ("2020021500", "a.example"), ("2020060100", "c.example")];
        assert_eq!(got, want.map(|(d, a)| (d.to_string(), a)).to_vec());
        assert_eq!(e[2].uri_m, "http://a.example/20180101000000/http://example.org/?a=1,2");
        assert_eq!(e[0].rels, vec!["first", "memento"]);
    }

    #[test]
    fn malformed_inputs() {
        for body in [
            "http://x/; rel=memento",
            "<http://x/; rel=memento",
            r#"<http://x/>; rel="memento""#,
            r#"<http://x/>; rel="memento"; datetime="yesterday""#,
            r#"<relative/path>; rel="memento"; datetime="Mon, 04 Apr 2016 00:00:00 GMT""#,
            r#"<http://x/>; rel="memento; datetime="Mon, 04 Apr 2016 00:00:00 GMT""#,
        ] {
            assert!(matches!(parse_timemap(body), Err(TimeMapError::MalformedLinkFormat(_))), "{body}");
        }
    }
}
