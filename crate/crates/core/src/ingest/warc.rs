//! Streaming WARC 1.0/1.1 reader.
//!
//! Records are read sequentially from any `Read`. A stream that starts with
//! the gzip magic is treated as a series of gzip members (one per record is
//! the usual layout); other compressed containers are rejected.

use std::io::{BufRead, BufReader, Read};

use chrono::{DateTime, Utc};
use flate2::read::MultiGzDecoder;

use super::datetime::parse_warc_date;
use super::{IngestError, MementoRecord, LOCAL_ARCHIVE};

/// One raw WARC record: version line, named fields and the content block.
#[derive(Debug, Clone)]
pub struct WarcRecord {
    pub version: String,
    pub headers: Vec<(String, String)>,
    pub block: Vec<u8>,
}

impl WarcRecord {
    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }

    pub fn record_type(&self) -> Option<&str> {
        self.header("WARC-Type")
    }
}

pub struct WarcReader {
    inner: BufReader<Box<dyn Read + Send + 'static>>,
    failed: bool,
}

impl WarcReader {
    /// Wraps `read`, sniffing the first bytes for compression.
    pub fn new<R: Read + Send + 'static>(read: R) -> Result<Self, IngestError> {
        let mut buffered = BufReader::new(read);
        let head = buffered.fill_buf()?;
        let source: Box<dyn Read + Send> = if head.starts_with(&[0x1f, 0x8b]) {
            Box::new(MultiGzDecoder::new(buffered))
        } else if head.starts_with(&[0x28, 0xb5, 0x2f, 0xfd]) {
            return Err(IngestError::UnsupportedCompression("zstd".into()));
        } else if head.starts_with(b"BZh") {
            return Err(IngestError::UnsupportedCompression("bzip2".into()));
        } else if head.starts_with(&[0xfd, b'7', b'z', b'X', b'Z']) {
            return Err(IngestError::UnsupportedCompression("xz".into()));
        } else {
            Box::new(buffered)
        };
        Ok(Self {
            inner: BufReader::new(source),
            failed: false,
        })
    }

    fn read_line(&mut self, buf: &mut Vec<u8>) -> Result<usize, IngestError> {
        buf.clear();
        Ok(self.inner.read_until(b'\n', buf)?)
    }

    fn read_record(&mut self) -> Result<Option<WarcRecord>, IngestError> {
        let mut line = Vec::new();
        // blank lines between records are tolerated
        let version = loop {
            if self.read_line(&mut line)? == 0 {
                return Ok(None);
            }
            let text = trim_eol(&line);
            if !text.is_empty() {
                break String::from_utf8_lossy(text).into_owned();
            }
        };
        if !version.starts_with("WARC/1.") {
            return Err(IngestError::MalformedWarc(format!("unknown version line {version:?}")));
        }

        let mut headers: Vec<(String, String)> = Vec::with_capacity(16);
        loop {
            if self.read_line(&mut line)? == 0 {
                return Err(IngestError::MalformedWarc("truncated header block".into()));
            }
            let text = trim_eol(&line);
            if text.is_empty() {
                break;
            }
            let text = String::from_utf8_lossy(text);
            if text.starts_with([' ', '\t']) {
                match headers.last_mut() {
                    Some((_, v)) => {
                        v.push(' ');
                        v.push_str(text.trim());
                    }
                    None => return Err(IngestError::MalformedWarc("continuation before first field".into())),
                }
                continue;
            }
            let Some((name, value)) = text.split_once(':') else {
                return Err(IngestError::MalformedWarc(format!("bad header line {text:?}")));
            };
            headers.push((name.trim().to_string(), value.trim().to_string()));
        }

        let length: usize = headers
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case("Content-Length"))
            .ok_or_else(|| IngestError::MalformedWarc("missing Content-Length".into()))?
            .1
            .parse()
            .map_err(|_| IngestError::MalformedWarc("bad Content-Length".into()))?;

        let mut block = Vec::with_capacity(length.min(1 << 24));
        let got = (&mut self.inner).take(length as u64).read_to_end(&mut block)?;
        if got != length {
            return Err(IngestError::MalformedWarc(format!(
                "truncated block: expected {length} bytes, got {got}"
            )));
        }
        // record trailer: CRLF CRLF
        for _ in 0..2 {
            let buf = self.inner.fill_buf()?;
            if buf.starts_with(b"\r\n") {
                self.inner.consume(2);
            } else if buf.starts_with(b"\n") {
                self.inner.consume(1);
            }
        }
        Ok(Some(WarcRecord { version, headers, block }))
    }
}

impl Iterator for WarcReader {
    type Item = Result<WarcRecord, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        match self.read_record() {
            Ok(Some(r)) => Some(Ok(r)),
            Ok(None) => None,
            Err(e) => {
                self.failed = true;
                Some(Err(e))
            }
        }
    }
}

fn trim_eol(line: &[u8]) -> &[u8] {
    let mut end = line.len();
    while end > 0 && matches!(line[end - 1], b'\n' | b'\r') {
        end -= 1;
    }
    &line[..end]
}

/// Counters for records passed over while ingesting.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct IngestStats {
    pub records: usize,
    pub responses: usize,
    pub html: usize,
    pub skipped_non_response: usize,
    pub skipped_non_html: usize,
}

/// Every `response` record, any content type, as a [`MementoRecord`].
pub struct ResponseReader {
    records: WarcReader,
    stats: IngestStats,
}

impl ResponseReader {
    pub fn new<R: Read + Send + 'static>(read: R) -> Result<Self, IngestError> {
        Ok(Self { records: WarcReader::new(read)?, stats: IngestStats::default() })
    }

    pub fn stats(&self) -> IngestStats {
        self.stats
    }
}

impl Iterator for ResponseReader {
    type Item = Result<MementoRecord, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let record = match self.records.next()? {
                Ok(r) => r,
                Err(e) => return Some(Err(e)),
            };
            self.stats.records += 1;
            if !record.record_type().is_some_and(|t| t.eq_ignore_ascii_case("response")) {
                self.stats.skipped_non_response += 1;
                continue;
            }
            self.stats.responses += 1;
            return Some(response_to_memento(&record));
        }
    }
}

/// Reads a whole WARC stream, keeping only HTML `response` records.
pub fn parse_warc<R: Read + Send + 'static>(read: R) -> Result<(Vec<MementoRecord>, IngestStats), IngestError> {
    let mut reader = ResponseReader::new(read)?;
    let mut out = Vec::new();
    for rec in reader.by_ref() {
        let rec = rec?;
        if rec.is_html() {
            out.push(rec);
        }
    }
    let mut stats = reader.stats();
    stats.html = out.len();
    stats.skipped_non_html = stats.responses - stats.html;
    Ok((out, stats))
}

fn response_to_memento(record: &WarcRecord) -> Result<MementoRecord, IngestError> {
    let target = record
        .header("WARC-Target-URI")
        .ok_or_else(|| IngestError::MalformedWarc("response without WARC-Target-URI".into()))?;
    let uri_r = target.trim_start_matches('<').trim_end_matches('>').to_string();
    let date = record
        .header("WARC-Date")
        .ok_or_else(|| IngestError::MalformedWarc("response without WARC-Date".into()))?;
    let capture: DateTime<Utc> = parse_warc_date(date)?;
    let capture = DateTime::from_timestamp(capture.timestamp(), 0).expect("in range");

    let http = parse_http_response(&record.block)?;
    MementoRecord::new(uri_r, None, capture, http.status, http.content_type, http.body, LOCAL_ARCHIVE.into())
}

struct HttpResponse {
    status: u16,
    content_type: String,
    body: Vec<u8>,
}

fn parse_http_response(block: &[u8]) -> Result<HttpResponse, IngestError> {
    let (head_end, sep_len) = find_header_end(block)
        .ok_or_else(|| IngestError::MalformedWarc("HTTP response without header terminator".into()))?;
    let head = String::from_utf8_lossy(&block[..head_end]);
    let mut lines = head.lines();
    let status_line = lines.next().unwrap_or_default();
    let mut parts = status_line.split_whitespace();
    let proto = parts.next().unwrap_or_default();
    if !proto.starts_with("HTTP/") {
        return Err(IngestError::MalformedWarc(format!("bad HTTP status line {status_line:?}")));
    }
    let status: u16 = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| IngestError::MalformedWarc(format!("bad HTTP status line {status_line:?}")))?;

    let mut content_type = String::new();
    let mut chunked = false;
    let mut gzipped = false;
    for line in lines {
        let Some((k, v)) = line.split_once(':') else { continue };
        let (k, v) = (k.trim(), v.trim());
        if k.eq_ignore_ascii_case("Content-Type") {
            content_type = v.to_string();
        } else if k.eq_ignore_ascii_case("Transfer-Encoding") {
            chunked = v.to_ascii_lowercase().contains("chunked");
        } else if k.eq_ignore_ascii_case("Content-Encoding") {
            gzipped = v.to_ascii_lowercase().contains("gzip");
        }
    }
    let mut body = block[head_end + sep_len..].to_vec();
    if chunked {
        if let Some(plain) = dechunk(&body) {
            body = plain;
        }
    }
    if gzipped {
        let mut plain = Vec::new();
        if MultiGzDecoder::new(&body[..]).read_to_end(&mut plain).is_ok() {
            body = plain;
        }
    }
    Ok(HttpResponse { status, content_type, body })
}

fn find_header_end(block: &[u8]) -> Option<(usize, usize)> {
    let crlf = block.windows(4).position(|w| w == b"\r\n\r\n").map(|i| (i, 4));
    let lf = block.windows(2).position(|w| w == b"\n\n").map(|i| (i, 2));
    match (crlf, lf) {
        (Some(a), Some(b)) => Some(if a.0 <= b.0 { a } else { b }),
        (a, b) => a.or(b),
    }
}

fn dechunk(mut data: &[u8]) -> Option<Vec<u8>> {
    let mut out = Vec::with_capacity(data.len());
    loop {
        let eol = data.windows(2).position(|w| w == b"\r\n")?;
        let size_field = std::str::from_utf8(&data[..eol]).ok()?;
        let size = usize::from_str_radix(size_field.split(';').next()?.trim(), 16).ok()?;
        data = &data[eol + 2..];
        if size == 0 {
            return Some(out);
        }
        out.extend_from_slice(data.get(..size)?);
        data = data.get(size..)?;
        data = data.strip_prefix(b"\r\n").unwrap_or(data);
    }
}

/// Serializes one WARC record, used for fixtures and tooling.
pub fn write_record(out: &mut Vec<u8>, headers: &[(&str, &str)], block: &[u8]) {
    out.extend_from_slice(b"WARC/1.0\r\n");
    for (k, v) in headers {
        out.extend_from_slice(format!("{k}: {v}\r\n").as_bytes());
    }
    out.extend_from_slice(format!("Content-Length: {}\r\n\r\n", block.len()).as_bytes());
    out.extend_from_slice(block);
    out.extend_from_slice(b"\r\n\r\n");
}

/// Serializes an HTTP `response` record for `uri` captured at `date`.
pub fn write_response(out: &mut Vec<u8>, uri: &str, date: &DateTime<Utc>, status: u16, content_type: &str, body: &[u8]) {
    let mut http = format!(
        "HTTP/1.1 {status} {}\r\nContent-Type: {content_type}\r\nContent-Length: {}\r\n\r\n",
        reason(status),
        body.len()
    )
    .into_bytes();
    http.extend_from_slice(body);
    let date = date.format("%Y-%m-%dT%H:%M:%SZ").to_string();
    write_record(
        out,
        &[
            ("WARC-Type", "response"),
            ("WARC-Target-URI", uri),
            ("WARC-Date", &date),
            ("Content-Type", "application/http; msgtype=response"),
        ],
        &http,
    );
}

fn reason(status: u16) -> &'static str {
    match status {
        200 => "OK",
        301 => "Moved Permanently",
        302 => "Found",
        404 => "Not Found",
        500 => "Internal Server Error",
        _ => "Status",
    }
}
