//! Small hand-built corpora used by tests, the acceptance suite and demos.
//!
//! `niehs` models an environmental-health page that drops the word
//! "pollution" between February and March 2017. `fws` models a permits
//! page that drops the phrase "endangered species".

use chrono::{DateTime, TimeZone, Utc};

use crate::ingest::warc::{write_record, write_response};
use crate::ingest::{MementoRecord, LOCAL_ARCHIVE};

pub const NIEHS_URL: &str = "https://www.niehs.nih.gov/health/topics/agents/air-pollution/index.cfm";
pub const FWS_URL: &str = "https://www.fws.gov/endangered/permits/index.html";

fn at(y: i32, m: u32, d: u32) -> DateTime<Utc> {
    Utc.with_ymd_and_hms(y, m, d, 12, 0, 0).unwrap()
}

/// Wraps body paragraphs in a page with navigation, footer and script
/// boilerplate. `variant` changes only the boilerplate bytes.
pub fn page(title: &str, paragraphs: &[&str], variant: u32) -> String {
    let mut html = format!(
        "<!DOCTYPE html>\n<html><head><title>{title}</title>\
         <script>var build = {variant};</script></head>\n<body>\n\
         <nav><a href=\"/\">Home</a> <a href=\"/news\">News {variant}</a></nav>\n<main>\n<h1>{title}</h1>\n"
    );
    for p in paragraphs {
        html.push_str(&format!("<p>{p}</p>\n"));
    }
    html.push_str(&format!("</main>\n<footer>Updated build {variant}</footer>\n</body></html>\n"));
    html
}

fn record(url: &str, t: DateTime<Utc>, status: u16, content_type: &str, body: String) -> MementoRecord {
    MementoRecord::new(url.into(), None, t, status, content_type.into(), body.into_bytes(), LOCAL_ARCHIVE.into())
        .expect("valid fixture record")
}

/// Capture datetimes of the niehs page.
pub fn niehs_captures() -> [DateTime<Utc>; 4] {
    [at(2016, 7, 14), at(2017, 2, 8), at(2017, 3, 21), at(2020, 1, 9)]
}

pub fn niehs_records() -> Vec<MementoRecord> {
    let title = "Air Pollution and Your Health";
    let [t0, t1, t2, t3] = niehs_captures();
    let intro = "Air pollution is a familiar environmental health hazard.";
    vec![
        record(NIEHS_URL, t0, 200, "text/html; charset=utf-8", page(title, &[
            intro,
            "We study how air pollution levels affect asthma and heart disease.",
            "Grants support research on climate change and health.",
        ], 1)),
        record(NIEHS_URL, t1, 200, "text/html; charset=utf-8", page(title, &[
            intro,
            "We study how air pollution levels affect asthma, heart disease and stroke.",
            "Grants support research on climate change and health.",
        ], 2)),
        record(NIEHS_URL, t2, 200, "text/html; charset=utf-8", page("Air Quality and Your Health", &[
            "Air quality is a familiar environmental health topic.",
            "We study how air quality affects asthma, heart disease and stroke.",
            "Grants support research on environmental health.",
        ], 3)),
        // Same text as the March 2017 capture, different boilerplate bytes.
        record(NIEHS_URL, t3, 200, "text/html; charset=utf-8", page("Air Quality and Your Health", &[
            "Air quality is a familiar environmental health topic.",
            "We study how air quality affects asthma, heart disease and stroke.",
            "Grants support research on environmental health.",
        ], 4)),
    ]
}

pub fn fws_captures() -> [DateTime<Utc>; 4] {
    [at(2016, 2, 3), at(2016, 6, 30), at(2017, 3, 2), at(2018, 5, 17)]
}

pub fn fws_records() -> Vec<MementoRecord> {
    let title = "Permits";
    let [t0, t1, t2, t3] = fws_captures();
    let before = [
        "Applications for endangered species permits are reviewed here.",
        "Scientific permits cover species recovery work.",
        "Contact the endangered program office for help with species questions.",
    ];
    let after = [
        "Applications for permits are reviewed here.",
        "Scientific permits cover species recovery work.",
        "Contact the endangered program office for help with species questions.",
    ];
    let later = [
        "Applications for permits are reviewed here.",
        "Permits cover species recovery work.",
        "Contact the endangered program office for help with species questions.",
    ];
    vec![
        record(FWS_URL, t0, 200, "text/html", page(title, &before, 1)),
        record(FWS_URL, t1, 200, "text/html", page(title, &before, 2)),
        record(FWS_URL, t2, 200, "text/html", page(title, &after, 3)),
        record(FWS_URL, t3, 200, "text/html", page(title, &later, 4)),
    ]
}

/// A WARC holding both pages plus request, warcinfo, redirect and image
/// records that the indexer must skip or keep for replay only.
pub fn fixture_warc() -> Vec<u8> {
    let mut out = Vec::new();
    write_record(
        &mut out,
        &[("WARC-Type", "warcinfo"), ("WARC-Date", "2020-01-09T12:00:00Z"), ("Content-Type", "application/warc-fields")],
        b"software: fixture\r\n",
    );
    for r in niehs_records().iter().chain(&fws_records()) {
        let date = r.capture_datetime.to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
        write_record(
            &mut out,
            &[("WARC-Type", "request"), ("WARC-Target-URI", r.uri_r.as_str()), ("WARC-Date", date.as_str()), ("Content-Type", "application/http; msgtype=request")],
            b"GET / HTTP/1.1\r\n\r\n",
        );
        write_response(&mut out, &r.uri_r, &r.capture_datetime, r.http_status, &r.content_type, &r.body);
    }
    write_response(&mut out, "http://www.niehs.nih.gov/old", &at(2017, 3, 21), 301, "text/html", b"<p>moved</p>");
    write_response(&mut out, "https://www.fws.gov/images/logo.png", &at(2016, 2, 3), 200, "image/png", b"\x89PNG\r\n\x1a\n");
    out
}

/// Every record of [`fixture_warc`], HTML and otherwise.
pub fn all_records() -> Vec<MementoRecord> {
    let mut v = niehs_records();
    v.extend(fws_records());
    v
}
