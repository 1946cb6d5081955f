//! Memento datetimes: the 14-digit `YYYYMMDDHHMMSS` form used in replay URLs
//! and the RFC 1123 form used by TimeMaps and `Memento-Datetime` headers.

use chrono::{DateTime, NaiveDate, NaiveDateTime, NaiveTime, TimeZone, Utc};

use super::IngestError;

pub const TIMESTAMP_FORMAT: &str = "%Y%m%d%H%M%S";

/// Parses either a 14-digit timestamp or an RFC 1123 date.
pub fn parse_memento_datetime(s: &str) -> Result<DateTime<Utc>, IngestError> {
    let s = s.trim();
    if s.bytes().all(|b| b.is_ascii_digit()) {
        return parse_timestamp14(s);
    }
    DateTime::parse_from_rfc2822(s)
        .map(|dt| dt.with_timezone(&Utc))
        .map_err(|_| IngestError::InvalidDatetime(s.to_string()))
}

fn parse_timestamp14(s: &str) -> Result<DateTime<Utc>, IngestError> {
    let invalid = || IngestError::InvalidDatetime(s.to_string());
    if s.len() != 14 {
        return Err(invalid());
    }
    let field = |r: std::ops::Range<usize>| s[r].parse::<u32>().map_err(|_| invalid());
    let year = field(0..4)? as i32;
    let date = NaiveDate::from_ymd_opt(year, field(4..6)?, field(6..8)?).ok_or_else(invalid)?;
    let time = NaiveTime::from_hms_opt(field(8..10)?, field(10..12)?, field(12..14)?)
        .ok_or_else(invalid)?;
    Ok(Utc.from_utc_datetime(&NaiveDateTime::new(date, time)))
}

pub fn format_timestamp14(dt: &DateTime<Utc>) -> String {
    dt.format(TIMESTAMP_FORMAT).to_string()
}

/// `Mon, 04 Apr 2016 00:00:00 GMT`
pub fn format_rfc1123(dt: &DateTime<Utc>) -> String {
    dt.format("%a, %d %b %Y %H:%M:%S GMT").to_string()
}

/// Parses a WARC-Date (ISO 8601 / RFC 3339, second precision or finer).
pub(crate) fn parse_warc_date(s: &str) -> Result<DateTime<Utc>, IngestError> {
    let s = s.trim();
    DateTime::parse_from_rfc3339(s)
        .map(|dt| dt.with_timezone(&Utc))
        .or_else(|_| NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%SZ").map(|n| n.and_utc()))
        .or_else(|_| parse_memento_datetime(s))
        .map_err(|_| IngestError::InvalidDatetime(s.to_string()))
}
