//! Document acquisition: WARC parsing, URL canonicalization and memento
//! datetimes.

mod canon;
mod datetime;
pub mod warc;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use canon::{canonicalize_url, CanonicalUrl};
pub use datetime::{format_rfc1123, format_timestamp14, parse_memento_datetime};
pub use warc::{parse_warc, IngestStats, ResponseReader, WarcReader, WarcRecord};

/// Archive identifier for captures read from local WARC files.
pub const LOCAL_ARCHIVE: &str = "local";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed WARC: {0}")]
    MalformedWarc(String),
    #[error("unsupported compression: {0}")]
    UnsupportedCompression(String),
    #[error("invalid URL: {0:?}")]
    InvalidUrl(String),
    #[error("invalid datetime: {0:?}")]
    InvalidDatetime(String),
    #[error("HTTP status {0} outside 100-599")]
    InvalidStatus(u16),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Everything about a capture except its body.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MementoMeta {
    pub uri_r: String,
    pub uri_m: Option<String>,
    #[serde(with = "ts14")]
    pub capture_datetime: DateTime<Utc>,
    pub http_status: u16,
    pub content_type: String,
    pub source_archive: String,
}

impl MementoMeta {
    pub fn is_html(&self) -> bool {
        self.content_type.to_ascii_lowercase().contains("html")
    }

    pub fn timestamp14(&self) -> String {
        format_timestamp14(&self.capture_datetime)
    }
}

/// One archived capture of a page.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MementoRecord {
    #[serde(flatten)]
    pub meta: MementoMeta,
    #[serde(with = "b64")]
    pub body: Vec<u8>,
}

impl std::ops::Deref for MementoRecord {
    type Target = MementoMeta;

    fn deref(&self) -> &MementoMeta {
        &self.meta
    }
}

impl MementoRecord {
    /// Validates status range and that `uri_r` is absolute.
    pub fn new(
        uri_r: String,
        uri_m: Option<String>,
        capture_datetime: DateTime<Utc>,
        http_status: u16,
        content_type: String,
        body: Vec<u8>,
        source_archive: String,
    ) -> Result<Self, IngestError> {
        if !(100..=599).contains(&http_status) {
            return Err(IngestError::InvalidStatus(http_status));
        }
        if uri_r.is_empty() || url::Url::parse(&uri_r).is_err() {
            return Err(IngestError::InvalidUrl(uri_r));
        }
        let capture_datetime = DateTime::from_timestamp(capture_datetime.timestamp(), 0).expect("in range");
        Ok(Self {
            meta: MementoMeta { uri_r, uri_m, capture_datetime, http_status, content_type, source_archive },
            body,
        })
    }

    pub fn canonical_url(&self) -> Result<CanonicalUrl, IngestError> {
        canonicalize_url(&self.meta.uri_r)
    }
}

/// Serde adapter: datetimes as 14-digit timestamps.
pub mod ts14 {
    use chrono::{DateTime, Utc};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(dt: &DateTime<Utc>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format_timestamp14(dt))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DateTime<Utc>, D::Error> {
        let s = String::deserialize(d)?;
        super::parse_memento_datetime(&s).map_err(serde::de::Error::custom)
    }

    pub mod option {
        use chrono::{DateTime, Utc};
        use serde::{Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(dt: &Option<DateTime<Utc>>, s: S) -> Result<S::Ok, S::Error> {
            match dt {
                Some(dt) => s.serialize_some(&super::super::format_timestamp14(dt)),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<DateTime<Utc>>, D::Error> {
            Option::<String>::deserialize(d)?
                .map(|s| super::super::parse_memento_datetime(&s).map_err(serde::de::Error::custom))
                .transpose()
        }
    }
}

mod b64 {
    use base64::{engine::general_purpose::STANDARD, Engine};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&STANDARD.encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(d)?;
        STANDARD.decode(s).map_err(serde::de::Error::custom)
    }
}
