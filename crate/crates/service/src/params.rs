//! Parsing helpers shared by the API and the CLI.

use chrono::{DateTime, Utc};
use chronodiff::ingest::parse_memento_datetime;
use chronodiff::memento::Window;

const TS_FILL: &str = "19700101000000";

/// Accepts 14-digit timestamps and their prefixes (`2017`, `201702`),
/// RFC 3339, RFC 1123 and `YYYY-MM-DD`.
pub fn parse_time(s: &str) -> Option<DateTime<Utc>> {
    let s = s.trim();
    if (4..=14).contains(&s.len()) && s.bytes().all(|b| b.is_ascii_digit()) {
        let padded = format!("{s}{}", &TS_FILL[s.len()..]);
        return parse_memento_datetime(&padded).ok();
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.with_timezone(&Utc));
    }
    if let Ok(d) = chrono::NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Some(d.and_hms_opt(0, 0, 0)?.and_utc());
    }
    parse_memento_datetime(s).ok()
}

/// `START..END` as a half-open window.
pub fn parse_window(s: &str) -> Option<Window> {
    let (a, b) = s.split_once("..")?;
    let w = Window { start: parse_time(a)?, end: parse_time(b)? };
    (w.start < w.end).then_some(w)
}

pub fn parse_bool(s: &str) -> Option<bool> {
    match s.to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "on" => Some(true),
        "false" | "0" | "no" | "off" => Some(false),
        _ => None,
    }
}
