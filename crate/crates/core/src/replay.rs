//! Stored capture bodies and closest-datetime lookup.

use std::collections::BTreeMap;
use std::sync::Arc;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{CanonicalUrl, MementoMeta, MementoRecord};
use crate::temporal::VersionChain;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ReplayError {
    #[error("chain has no captures")]
    EmptyChain,
}

/// Position of `t` among sorted datetimes: the nearest entry, with ties
/// going to the earlier one.
pub fn closest_index(sorted: &[DateTime<Utc>], t: DateTime<Utc>) -> Option<usize> {
    if sorted.is_empty() {
        return None;
    }
    let after = sorted.partition_point(|d| *d < t);
    if after == 0 {
        return Some(0);
    }
    if after == sorted.len() {
        return Some(sorted.len() - 1);
    }
    let before_gap = t - sorted[after - 1];
    let after_gap = sorted[after] - t;
    Some(if after_gap < before_gap { after } else { after - 1 })
}

/// A capture of `chain` nearest to `t`: `(version_index, member)`.
pub fn closest_memento(chain: &VersionChain, t: DateTime<Utc>) -> Result<(usize, &MementoMeta), ReplayError> {
    let captures: Vec<(usize, &MementoMeta)> = chain.captures().collect();
    let times: Vec<DateTime<Utc>> = captures.iter().map(|(_, m)| m.capture_datetime).collect();
    closest_index(&times, t).map(|i| captures[i]).ok_or(ReplayError::EmptyChain)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoredCapture {
    #[serde(flatten)]
    pub meta: MementoMeta,
    #[serde(with = "arc_b64")]
    pub body: Arc<[u8]>,
}

/// Original bodies of every kept capture, for bannerless replay.
#[derive(Debug, Clone, Default)]
pub struct ReplayStore {
    by_url: BTreeMap<CanonicalUrl, Vec<StoredCapture>>,
}

impl ReplayStore {
    pub fn insert(&mut self, url: CanonicalUrl, record: MementoRecord) {
        self.insert_capture(url, StoredCapture { meta: record.meta, body: record.body.into() });
    }

    pub fn insert_capture(&mut self, url: CanonicalUrl, capture: StoredCapture) {
        let list = self.by_url.entry(url).or_default();
        let at = list.partition_point(|c| c.meta.capture_datetime <= capture.meta.capture_datetime);
        list.insert(at, capture);
    }

    pub fn captures(&self, url: &CanonicalUrl) -> &[StoredCapture] {
        self.by_url.get(url).map_or(&[], Vec::as_slice)
    }

    pub fn closest(&self, url: &CanonicalUrl, t: DateTime<Utc>) -> Option<&StoredCapture> {
        let list = self.by_url.get(url)?;
        let times: Vec<_> = list.iter().map(|c| c.meta.capture_datetime).collect();
        closest_index(&times, t).map(|i| &list[i])
    }

    /// The stored body for an exact capture.
    pub fn exact(&self, url: &CanonicalUrl, t: DateTime<Utc>) -> Option<&StoredCapture> {
        self.by_url.get(url)?.iter().find(|c| c.meta.capture_datetime == t)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&CanonicalUrl, &StoredCapture)> {
        self.by_url.iter().flat_map(|(u, l)| l.iter().map(move |c| (u, c)))
    }

    pub fn len(&self) -> usize {
        self.by_url.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.by_url.is_empty()
    }
}

mod arc_b64 {
    use std::sync::Arc;

    use base64::{engine::general_purpose::STANDARD, Engine};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &Arc<[u8]>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&STANDARD.encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Arc<[u8]>, D::Error> {
        let s = String::deserialize(d)?;
        STANDARD.decode(s).map(Into::into).map_err(serde::de::Error::custom)
    }
}
