//! Inverted index over page text and change fields.
//!
//! Text postings point at a version and carry the term frequency. Change
//! postings point at a transition (version `k` to `k + 1`) and carry the
//! signed occurrence delta. Bigram fields use the two tokens joined by a
//! single space as their term.

mod persist;
mod varint;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::CanonicalUrl;
use crate::replay::ReplayStore;
use crate::temporal::{CountChange, VersionChain};

pub use persist::{Manifest, ManifestCounts, FORMAT_VERSION};

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("duplicate chain for {0}")]
    DuplicateChainId(CanonicalUrl),
    #[error("unknown field {0:?}")]
    UnknownField(String),
    #[error("corrupt index: {0}")]
    CorruptIndex(String),
    #[error("index format {found:?} is not supported (expected {expected:?})")]
    VersionMismatch { found: String, expected: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    Text,
    Added,
    Deleted,
    PartiallyDeleted,
    PartiallyAdded,
    AddedBigram,
    DeletedBigram,
    PartiallyAddedBigram,
    PartiallyDeletedBigram,
}

impl Field {
    pub const ALL: [Field; 9] = [
        Field::Text,
        Field::Added,
        Field::Deleted,
        Field::PartiallyDeleted,
        Field::PartiallyAdded,
        Field::AddedBigram,
        Field::DeletedBigram,
        Field::PartiallyAddedBigram,
        Field::PartiallyDeletedBigram,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Field::Text => "text",
            Field::Added => "added",
            Field::Deleted => "deleted",
            Field::PartiallyDeleted => "partially_deleted",
            Field::PartiallyAdded => "partially_added",
            Field::AddedBigram => "added_bigram",
            Field::DeletedBigram => "deleted_bigram",
            Field::PartiallyAddedBigram => "partially_added_bigram",
            Field::PartiallyDeletedBigram => "partially_deleted_bigram",
        }
    }

    fn id(self) -> u8 {
        Field::ALL.iter().position(|f| *f == self).expect("listed") as u8
    }

    fn from_id(id: u8) -> Option<Field> {
        Field::ALL.get(id as usize).copied()
    }

    /// True for every field except `text`.
    pub fn is_change(self) -> bool {
        self != Field::Text
    }

    pub fn is_bigram(self) -> bool {
        matches!(
            self,
            Field::AddedBigram | Field::DeletedBigram | Field::PartiallyAddedBigram | Field::PartiallyDeletedBigram
        )
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Field {
    type Err = IndexError;

    fn from_str(s: &str) -> Result<Self, IndexError> {
        Field::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| IndexError::UnknownField(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Posting {
    pub chain_id: u32,
    /// Version index for `text`, transition index for change fields.
    pub ordinal: u32,
    /// Term frequency for `text`, signed count delta for change fields.
    pub payload: i64,
}

pub fn bigram_term(first: &str, second: &str) -> String {
    format!("{first} {second}")
}

type FieldLists = BTreeMap<Field, Vec<Posting>>;

/// The queryable artifact: term dictionary, version chains and bodies.
#[derive(Debug, Clone)]
pub struct ChangeIndex {
    dict: BTreeMap<String, FieldLists>,
    chains: Vec<VersionChain>,
    by_url: BTreeMap<CanonicalUrl, u32>,
    replay: ReplayStore,
    manifest: Manifest,
}

impl ChangeIndex {
    pub fn chains(&self) -> &[VersionChain] {
        &self.chains
    }

    pub fn chain(&self, chain_id: u32) -> Option<&VersionChain> {
        self.chains.get(chain_id as usize)
    }

    pub fn chain_id(&self, url: &CanonicalUrl) -> Option<u32> {
        self.by_url.get(url).copied()
    }

    pub fn chain_by_url(&self, url: &CanonicalUrl) -> Option<&VersionChain> {
        self.chain_id(url).and_then(|id| self.chain(id))
    }

    pub fn replay(&self) -> &ReplayStore {
        &self.replay
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    /// Postings for `term` in `field`, sorted by `(chain_id, ordinal)`.
    pub fn lookup(&self, field: Field, term: &str) -> &[Posting] {
        self.dict.get(term).and_then(|f| f.get(&field)).map_or(&[], Vec::as_slice)
    }

    pub fn lookup_named(&self, field: &str, term: &str) -> Result<&[Posting], IndexError> {
        Ok(self.lookup(field.parse()?, term))
    }

    /// Dictionary terms in sorted order.
    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.dict.keys().map(String::as_str)
    }

    /// Terms that have postings in `field`.
    pub fn terms_in(&self, field: Field) -> impl Iterator<Item = (&str, &[Posting])> {
        self.dict
            .iter()
            .filter_map(move |(t, lists)| lists.get(&field).map(|l| (t.as_str(), l.as_slice())))
    }
}

fn push_changes<K>(
    dict: &mut BTreeMap<String, FieldLists>,
    field: Field,
    changes: &BTreeMap<K, CountChange>,
    chain_id: u32,
    transition: u32,
    term: impl Fn(&K) -> String,
) {
    for (k, c) in changes {
        dict.entry(term(k)).or_default().entry(field).or_default().push(Posting {
            chain_id,
            ordinal: transition,
            payload: c.delta(),
        });
    }
}

/// Builds postings for every term in every field. Chain ids follow the
/// order of `chains`.
pub fn build_index(chains: Vec<VersionChain>, replay: ReplayStore) -> Result<ChangeIndex, IndexError> {
    let mut by_url = BTreeMap::new();
    for (id, chain) in chains.iter().enumerate() {
        if by_url.insert(chain.canonical_url.clone(), id as u32).is_some() {
            return Err(IndexError::DuplicateChainId(chain.canonical_url.clone()));
        }
    }

    let mut dict: BTreeMap<String, FieldLists> = BTreeMap::new();
    for (id, chain) in chains.iter().enumerate() {
        let chain_id = id as u32;
        for v in &chain.versions {
            let mut terms: Vec<(&String, &u32)> = v.doc.unigram_counts.iter().collect();
            terms.sort_unstable();
            for (term, tf) in terms {
                dict.entry(term.clone()).or_default().entry(Field::Text).or_default().push(Posting {
                    chain_id,
                    ordinal: v.version_index as u32,
                    payload: i64::from(*tf),
                });
            }
        }
        for (k, cs) in chain.transitions.iter().enumerate() {
            let k = k as u32;
            let word = |t: &String| t.clone();
            let pair = |(a, b): &(String, String)| bigram_term(a, b);
            push_changes(&mut dict, Field::Added, &cs.added_terms, chain_id, k, word);
            push_changes(&mut dict, Field::Deleted, &cs.removed_terms, chain_id, k, word);
            push_changes(&mut dict, Field::PartiallyDeleted, &cs.partially_removed_terms, chain_id, k, word);
            push_changes(&mut dict, Field::PartiallyAdded, &cs.partially_added_terms, chain_id, k, word);
            push_changes(&mut dict, Field::AddedBigram, &cs.added_bigrams, chain_id, k, pair);
            push_changes(&mut dict, Field::DeletedBigram, &cs.removed_bigrams, chain_id, k, pair);
            push_changes(&mut dict, Field::PartiallyDeletedBigram, &cs.partially_removed_bigrams, chain_id, k, pair);
            push_changes(&mut dict, Field::PartiallyAddedBigram, &cs.partially_added_bigrams, chain_id, k, pair);
        }
    }

    let manifest = Manifest::for_contents(&dict, &chains, &replay);
    Ok(ChangeIndex { dict, chains, by_url, replay, manifest })
}

/// Distinct `(chain_id, transition)` pairs in the given postings.
pub fn transitions_of(postings: &[&[Posting]]) -> HashSet<(u32, u32)> {
    postings.iter().flat_map(|l| l.iter().map(|p| (p.chain_id, p.ordinal))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extract::ExtractedDoc;
    use crate::ingest::{canonicalize_url, MementoMeta};
    use crate::temporal::build_chain;
    use chrono::{Duration, TimeZone, Utc};

    fn doc(url: &str, day: i64, text: &str) -> ExtractedDoc {
        let meta = MementoMeta {
            uri_r: format!("http://{url}"),
            uri_m: None,
            capture_datetime: Utc.with_ymd_and_hms(2016, 7, 1, 0, 0, 0).unwrap() + Duration::days(day),
            http_status: 200,
            content_type: "text/html".into(),
            source_archive: "local".into(),
        };
        ExtractedDoc::from_blocks(canonicalize_url(url).unwrap(), meta, text.split('|').map(str::to_string).collect())
    }

    fn chain(url: &str, texts: &[&str]) -> VersionChain {
        build_chain(texts.iter().enumerate().map(|(i, t)| doc(url, i as i64 * 30, t)).collect()).unwrap()
    }

    #[test]
    fn single_removal() {
        let c = chain("example.org/a", &["air pollution levels", "air levels"]);
        let idx = build_index(vec![c], ReplayStore::default()).unwrap();
        assert_eq!(idx.lookup(Field::Deleted, "pollution"), &[Posting { chain_id: 0, ordinal: 0, payload: -1 }]);
        assert!(idx.lookup(Field::Added, "pollution").is_empty());
        assert_eq!(idx.lookup(Field::DeletedBigram, "air pollution").len(), 1);
        assert_eq!(idx.lookup(Field::AddedBigram, "air levels").len(), 1);
    }

    #[test]
    fn empty_index() {
        let idx = build_index(vec![], ReplayStore::default()).unwrap();
        assert!(idx.lookup(Field::Text, "x").is_empty());
        assert_eq!(idx.terms().count(), 0);
        assert_eq!(idx.manifest().counts.chains, 0);
    }

    #[test]
    fn duplicate_chain() {
        let a = chain("example.org/a", &["x"]);
        let err = build_index(vec![a.clone(), a], ReplayStore::default()).unwrap_err();
        assert!(matches!(err, IndexError::DuplicateChainId(_)));
    }

    #[test]
    fn unknown_field() {
        let idx = build_index(vec![], ReplayStore::default()).unwrap();
        assert!(matches!(idx.lookup_named("removed", "x"), Err(IndexError::UnknownField(_))));
        assert!(idx.lookup_named("partially_deleted", "x").unwrap().is_empty());
        for f in Field::ALL {
            assert_eq!(f.name().parse::<Field>().unwrap(), f);
            assert_eq!(Field::from_id(f.id()), Some(f));
        }
    }

    #[test]
    fn text_payloads_sum_to_corpus_counts() {
        let chains = vec![
            chain("example.org/a", &["x x y", "x y z", "z"]),
            chain("example.org/b", &["x", "y y"]),
        ];
        let idx = build_index(chains.clone(), ReplayStore::default()).unwrap();
        for term in ["x", "y", "z"] {
            let brute: u32 = chains.iter().flat_map(|c| &c.versions).map(|v| v.doc.tokens.iter().filter(|t| *t == term).count() as u32).sum();
            let sum: i64 = idx.lookup(Field::Text, term).iter().map(|p| p.payload).sum();
            assert_eq!(sum, i64::from(brute), "{term}");
        }
    }

    #[test]
    fn postings_mirror_change_sets() {
        let chains = vec![
            chain("example.org/a", &["a a b c", "a b b", "c d", "a"]),
            chain("example.org/b", &["p q|r", "q r p", "p"]),
        ];
        let idx = build_index(chains.clone(), ReplayStore::default()).unwrap();
        for (cid, c) in chains.iter().enumerate() {
            for (k, cs) in c.transitions.iter().enumerate() {
                for (set, field) in [
                    (&cs.removed_terms, Field::Deleted),
                    (&cs.added_terms, Field::Added),
                    (&cs.partially_removed_terms, Field::PartiallyDeleted),
                    (&cs.partially_added_terms, Field::PartiallyAdded),
                ] {
                    for term in idx.terms().map(str::to_string).collect::<Vec<_>>() {
                        let posted = idx.lookup(field, &term).iter().any(|p| p.chain_id == cid as u32 && p.ordinal == k as u32);
                        assert_eq!(posted, set.contains_key(&term), "{field} {term} {cid}/{k}");
                    }
                }
            }
        }
        for f in Field::ALL {
            for (_, list) in idx.terms_in(f) {
                assert!(list.windows(2).all(|w| (w[0].chain_id, w[0].ordinal) < (w[1].chain_id, w[1].ordinal)));
                assert!(list.iter().all(|p| if f.is_change() { p.payload != 0 } else { p.payload > 0 }));
            }
        }
    }
}
