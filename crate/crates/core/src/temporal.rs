//! Version chains: captures of one page coalesced into distinct versions with
//! validity ranges, and the term-level change sets between them.

use std::collections::{BTreeMap, HashMap};
use std::hash::Hash;

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extract::{ContentHash, ExtractedDoc};
use crate::ingest::{CanonicalUrl, MementoMeta};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TemporalError {
    #[error("documents belong to different pages: {0} and {1}")]
    MixedUrls(CanonicalUrl, CanonicalUrl),
    #[error("a version chain needs at least one document")]
    Empty,
}

/// Half-open `[start, end)`; `end` is `None` for the current version.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Validity {
    pub start: DateTime<Utc>,
    pub end: Option<DateTime<Utc>>,
}

impl Validity {
    pub fn contains(&self, t: DateTime<Utc>) -> bool {
        t >= self.start && self.end.is_none_or(|e| t < e)
    }
}

/// Left-open, right-closed `(after, until]`: the change happened after the
/// last capture of the old version and no later than the first capture of
/// the new one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ChangeInterval {
    pub after: DateTime<Utc>,
    pub until: DateTime<Utc>,
}

impl ChangeInterval {
    /// Whether the interval shares any instant with `[from, to]`.
    pub fn overlaps(&self, from: Option<DateTime<Utc>>, to: Option<DateTime<Utc>>) -> bool {
        from.is_none_or(|f| self.until >= f) && to.is_none_or(|t| self.after < t)
    }
}

#[derive(Debug, Clone)]
pub struct CoalescedVersion {
    pub version_index: usize,
    pub validity: Validity,
    /// Captures sharing this content, oldest first.
    pub members: Vec<MementoMeta>,
    /// Extraction of the earliest member.
    pub doc: ExtractedDoc,
}

impl CoalescedVersion {
    pub fn first_capture(&self) -> DateTime<Utc> {
        self.members[0].capture_datetime
    }

    pub fn last_capture(&self) -> DateTime<Utc> {
        self.members[self.members.len() - 1].capture_datetime
    }

    pub fn content_hash(&self) -> ContentHash {
        self.doc.content_hash
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountChange {
    pub before: u32,
    pub after: u32,
}

impl CountChange {
    pub fn delta(&self) -> i64 {
        i64::from(self.after) - i64::from(self.before)
    }
}

pub type Bigram = (String, String);

/// What changed between two consecutive versions.
///
/// Terms are classified by how their occurrence count moved:
/// `0 -> n` added, `n -> 0` removed, `n -> m` with `0 < m < n` partially
/// removed, and `n -> m` with `0 < n < m` partially added. Bigrams follow
/// the same rules.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ChangeSet {
    pub from_index: usize,
    pub to_index: usize,
    pub change_interval: Option<ChangeInterval>,
    pub added_terms: BTreeMap<String, CountChange>,
    pub removed_terms: BTreeMap<String, CountChange>,
    pub partially_removed_terms: BTreeMap<String, CountChange>,
    pub partially_added_terms: BTreeMap<String, CountChange>,
    pub added_bigrams: BTreeMap<Bigram, CountChange>,
    pub removed_bigrams: BTreeMap<Bigram, CountChange>,
    pub partially_removed_bigrams: BTreeMap<Bigram, CountChange>,
    pub partially_added_bigrams: BTreeMap<Bigram, CountChange>,
}

impl ChangeSet {
    pub fn is_empty(&self) -> bool {
        self.added_terms.is_empty()
            && self.removed_terms.is_empty()
            && self.partially_removed_terms.is_empty()
            && self.partially_added_terms.is_empty()
            && self.added_bigrams.is_empty()
            && self.removed_bigrams.is_empty()
            && self.partially_removed_bigrams.is_empty()
            && self.partially_added_bigrams.is_empty()
    }
}

struct Classified<K> {
    added: BTreeMap<K, CountChange>,
    removed: BTreeMap<K, CountChange>,
    partially_removed: BTreeMap<K, CountChange>,
    partially_added: BTreeMap<K, CountChange>,
}

fn classify<K: Clone + Ord + Eq + Hash>(a: &HashMap<K, u32>, b: &HashMap<K, u32>) -> Classified<K> {
    let mut out = Classified {
        added: BTreeMap::new(),
        removed: BTreeMap::new(),
        partially_removed: BTreeMap::new(),
        partially_added: BTreeMap::new(),
    };
    for (k, &before) in a {
        let after = b.get(k).copied().unwrap_or(0);
        let change = CountChange { before, after };
        if after == 0 {
            out.removed.insert(k.clone(), change);
        } else if after < before {
            out.partially_removed.insert(k.clone(), change);
        } else if after > before {
            out.partially_added.insert(k.clone(), change);
        }
    }
    for (k, &after) in b {
        if !a.contains_key(k) {
            out.added.insert(k.clone(), CountChange { before: 0, after });
        }
    }
    out
}

/// Term and bigram changes from `a` to `b`.
pub fn compute_changes(a: &ExtractedDoc, b: &ExtractedDoc) -> ChangeSet {
    let terms = classify(&a.unigram_counts, &b.unigram_counts);
    let bigrams = classify(&a.bigram_counts, &b.bigram_counts);
    ChangeSet {
        from_index: 0,
        to_index: 1,
        change_interval: Some(ChangeInterval { after: a.capture_datetime(), until: b.capture_datetime() }),
        added_terms: terms.added,
        removed_terms: terms.removed,
        partially_removed_terms: terms.partially_removed,
        partially_added_terms: terms.partially_added,
        added_bigrams: bigrams.added,
        removed_bigrams: bigrams.removed,
        partially_removed_bigrams: bigrams.partially_removed,
        partially_added_bigrams: bigrams.partially_added,
    }
}

#[derive(Debug, Clone)]
pub struct VersionChain {
    pub canonical_url: CanonicalUrl,
    pub versions: Vec<CoalescedVersion>,
    /// `transitions[k]` goes from version `k` to `k + 1`.
    pub transitions: Vec<ChangeSet>,
}

impl VersionChain {
    pub fn change_interval(&self, transition: usize) -> ChangeInterval {
        ChangeInterval {
            after: self.versions[transition].last_capture(),
            until: self.versions[transition + 1].first_capture(),
        }
    }

    /// All member captures in datetime order.
    pub fn captures(&self) -> impl Iterator<Item = (usize, &MementoMeta)> {
        self.versions.iter().flat_map(|v| v.members.iter().map(move |m| (v.version_index, m)))
    }
}

/// Sorts captures, coalesces runs with equal content and computes the change
/// set of every transition.
///
/// Captures are ordered by datetime (ties broken by content hash). A capture
/// sharing its exact datetime with the previous one is dropped so that
/// validity ranges stay non-empty.
pub fn build_chain(mut docs: Vec<ExtractedDoc>) -> Result<VersionChain, TemporalError> {
    let Some(first) = docs.first() else {
        return Err(TemporalError::Empty);
    };
    let canonical_url = first.canonical_url.clone();
    if let Some(other) = docs.iter().find(|d| d.canonical_url != canonical_url) {
        return Err(TemporalError::MixedUrls(canonical_url, other.canonical_url.clone()));
    }
    docs.sort_by(|a, b| a.capture_datetime().cmp(&b.capture_datetime()).then(a.content_hash.cmp(&b.content_hash)));
    docs.dedup_by(|later, earlier| later.capture_datetime() == earlier.capture_datetime());

    let mut versions: Vec<CoalescedVersion> = Vec::new();
    for doc in docs {
        match versions.last_mut() {
            Some(v) if v.doc.content_hash == doc.content_hash => v.members.push(doc.source),
            _ => versions.push(CoalescedVersion {
                version_index: versions.len(),
                validity: Validity { start: doc.capture_datetime(), end: None },
                members: vec![doc.source.clone()],
                doc,
            }),
        }
    }
    for i in 1..versions.len() {
        let next_start = versions[i].validity.start;
        versions[i - 1].validity.end = Some(next_start);
    }
    Ok(assemble_chain(canonical_url, versions))
}

/// Builds a chain from already-coalesced versions, computing transitions.
pub fn assemble_chain(canonical_url: CanonicalUrl, versions: Vec<CoalescedVersion>) -> VersionChain {
    let transitions = versions
        .windows(2)
        .enumerate()
        .map(|(k, pair)| {
            let mut cs = compute_changes(&pair[0].doc, &pair[1].doc);
            cs.from_index = k;
            cs.to_index = k + 1;
            cs.change_interval = Some(ChangeInterval { after: pair[0].last_capture(), until: pair[1].first_capture() });
            cs
        })
        .collect();
    VersionChain { canonical_url, versions, transitions }
}

/// Groups documents by canonical URL and builds one chain per page, in URL
/// order.
pub fn build_chains(docs: Vec<ExtractedDoc>) -> Vec<VersionChain> {
    let mut groups: BTreeMap<CanonicalUrl, Vec<ExtractedDoc>> = BTreeMap::new();
    for d in docs {
        groups.entry(d.canonical_url.clone()).or_default().push(d);
    }
    groups
        .into_values()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|g| build_chain(g).expect("grouped by URL and non-empty"))
        .collect()
}

/// One side of a lifespan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum LifespanBound {
    /// Before the first capture (start) or still present at the last (end).
    Open,
    Between(ChangeInterval),
}

/// A maximal run of versions in which some text is present.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Lifespan {
    pub first_version: usize,
    pub last_version: usize,
    /// When the text appeared.
    pub added: LifespanBound,
    /// When the text disappeared.
    pub removed: LifespanBound,
}

impl Lifespan {
    pub fn contains_version(&self, v: usize) -> bool {
        (self.first_version..=self.last_version).contains(&v)
    }
}

/// Presence runs of `count(version) > 0` over the chain.
pub fn lifespans_by(chain: &VersionChain, count: impl Fn(&ExtractedDoc) -> u32) -> Vec<Lifespan> {
    let present: Vec<bool> = chain.versions.iter().map(|v| count(&v.doc) > 0).collect();
    let n = present.len();
    let mut out = Vec::new();
    let mut i = 0;
    while i < n {
        if !present[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i + 1 < n && present[i + 1] {
            i += 1;
        }
        let end = i;
        out.push(Lifespan {
            first_version: start,
            last_version: end,
            added: if start == 0 { LifespanBound::Open } else { LifespanBound::Between(chain.change_interval(start - 1)) },
            removed: if end + 1 == n { LifespanBound::Open } else { LifespanBound::Between(chain.change_interval(end)) },
        });
        i += 1;
    }
    out
}

pub fn term_lifespan(chain: &VersionChain, term: &str) -> Vec<Lifespan> {
    lifespans_by(chain, |d| d.count(term))
}

pub fn phrase_lifespan<S: AsRef<str>>(chain: &VersionChain, phrase: &[S]) -> Vec<Lifespan> {
    lifespans_by(chain, |d| d.phrase_count(phrase))
}
