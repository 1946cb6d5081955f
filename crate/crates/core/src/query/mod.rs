//! Change queries: the four query types, filters, ranking and hit models.

mod snippet;

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extract::{tokenize, ExtractedDoc};
use crate::index::{bigram_term, ChangeIndex, Field};
use crate::ingest::{ts14, CanonicalUrl};
use crate::temporal::{lifespans_by, ChangeInterval, CoalescedVersion, Lifespan, LifespanBound, VersionChain};

pub use snippet::{make_snippet, Mark, Side, Snippet, SnippetToken, DEFAULT_CONTEXT};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QueryError {
    #[error("query has no searchable tokens")]
    EmptyQuery,
    #[error("phrase queries need at least two tokens")]
    PhraseTooShort,
    #[error("term queries take one token, got {0}")]
    NotASingleTerm(usize),
    #[error("unknown change type {0:?}")]
    UnknownChangeType(String),
}

impl QueryError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            QueryError::EmptyQuery => "EmptyQuery",
            QueryError::PhraseTooShort => "PhraseTooShort",
            QueryError::NotASingleTerm(_) => "NotASingleTerm",
            QueryError::UnknownChangeType(_) => "UnknownChangeType",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChangeType {
    AddedTerm,
    DeletedTerm,
    AddedPhrase,
    DeletedPhrase,
}

impl ChangeType {
    pub const ALL: [ChangeType; 4] =
        [ChangeType::AddedTerm, ChangeType::DeletedTerm, ChangeType::AddedPhrase, ChangeType::DeletedPhrase];

    pub fn name(self) -> &'static str {
        match self {
            ChangeType::AddedTerm => "added_term",
            ChangeType::DeletedTerm => "deleted_term",
            ChangeType::AddedPhrase => "added_phrase",
            ChangeType::DeletedPhrase => "deleted_phrase",
        }
    }

    pub fn is_phrase(self) -> bool {
        matches!(self, ChangeType::AddedPhrase | ChangeType::DeletedPhrase)
    }

    pub fn side(self) -> Side {
        match self {
            ChangeType::DeletedTerm | ChangeType::DeletedPhrase => Side::Deleted,
            ChangeType::AddedTerm | ChangeType::AddedPhrase => Side::Added,
        }
    }
}

impl fmt::Display for ChangeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ChangeType {
    type Err = QueryError;

    fn from_str(s: &str) -> Result<Self, QueryError> {
        ChangeType::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| QueryError::UnknownChangeType(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ChangeQuery {
    pub change_type: ChangeType,
    pub text: String,
    pub include_partial: bool,
    /// Keep hits whose change interval overlaps `[from, to]`.
    pub from: Option<DateTime<Utc>>,
    pub to: Option<DateTime<Utc>>,
    /// Host suffix, matched on label boundaries.
    pub domain: Option<String>,
}

impl ChangeQuery {
    pub fn new(change_type: ChangeType, text: impl Into<String>) -> Self {
        ChangeQuery { change_type, text: text.into(), include_partial: true, from: None, to: None, domain: None }
    }

    pub fn partial(mut self, include: bool) -> Self {
        self.include_partial = include;
        self
    }

    pub fn between(mut self, from: Option<DateTime<Utc>>, to: Option<DateTime<Utc>>) -> Self {
        self.from = from;
        self.to = to;
        self
    }

    pub fn domain(mut self, domain: impl Into<String>) -> Self {
        self.domain = Some(domain.into());
        self
    }

    /// Tokens of the query text, checked against the query type.
    pub fn tokens(&self) -> Result<Vec<String>, QueryError> {
        let tokens = tokenize(&self.text);
        match (tokens.len(), self.change_type.is_phrase()) {
            (0, _) => Err(QueryError::EmptyQuery),
            (1, true) => Err(QueryError::PhraseTooShort),
            (1, false) | (_, true) => Ok(tokens),
            (n, false) => Err(QueryError::NotASingleTerm(n)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VersionRef {
    pub version_index: usize,
    #[serde(with = "ts14")]
    pub first_capture: DateTime<Utc>,
    #[serde(with = "ts14")]
    pub last_capture: DateTime<Utc>,
    /// Original URL of the first member capture, for replay links.
    pub uri_r: String,
}

impl VersionRef {
    pub fn of(v: &CoalescedVersion) -> Self {
        VersionRef {
            version_index: v.version_index,
            first_capture: v.first_capture(),
            last_capture: v.last_capture(),
            uri_r: v.members[0].uri_r.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SearchHit {
    pub canonical_url: CanonicalUrl,
    pub chain_id: u32,
    pub transition: usize,
    pub pre_change: VersionRef,
    pub post_change: VersionRef,
    /// Start of the presence run for deletion hits; `None` when the text
    /// was already there at the first capture, and for addition hits.
    pub addition_version: Option<VersionRef>,
    pub change_interval: ChangeInterval,
    pub lifespan: Lifespan,
    pub partial: bool,
    pub count_before: u32,
    pub count_after: u32,
    pub delta: u32,
    pub snippet: Snippet,
    /// 1-based position in the ranked list.
    pub rank: usize,
}

/// Total ordering key: full before partial, larger delta, later change,
/// then URL and transition.
pub type RankKey<'a> = (bool, Reverse<u32>, Reverse<DateTime<Utc>>, &'a str, usize);

pub fn rank_key(hit: &SearchHit) -> RankKey<'_> {
    (
        hit.partial,
        Reverse(hit.delta),
        Reverse(hit.change_interval.until),
        hit.canonical_url.as_str(),
        hit.transition,
    )
}

pub fn compare_hits(a: &SearchHit, b: &SearchHit) -> Ordering {
    rank_key(a).cmp(&rank_key(b))
}

/// Sorts by [`rank_key`] and renumbers ranks.
pub fn rank_hits(hits: &mut [SearchHit]) {
    hits.sort_by(compare_hits);
    for (i, h) in hits.iter_mut().enumerate() {
        h.rank = i + 1;
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ExecuteOptions {
    pub snippet_context: usize,
}

impl Default for ExecuteOptions {
    fn default() -> Self {
        ExecuteOptions { snippet_context: DEFAULT_CONTEXT }
    }
}

pub fn execute(query: &ChangeQuery, index: &ChangeIndex) -> Result<Vec<SearchHit>, QueryError> {
    execute_with(query, index, ExecuteOptions::default())
}

fn occurrences(doc: &ExtractedDoc, tokens: &[String]) -> u32 {
    if tokens.len() == 1 {
        doc.count(&tokens[0])
    } else {
        doc.phrase_count(tokens)
    }
}

pub fn execute_with(query: &ChangeQuery, index: &ChangeIndex, options: ExecuteOptions) -> Result<Vec<SearchHit>, QueryError> {
    let tokens = query.tokens()?;
    let side = query.change_type.side();
    let candidates = candidate_transitions(index, &tokens, side, query.include_partial);

    let mut hits = Vec::new();
    // Lifespans are computed once per chain.
    let mut lifespans: BTreeMap<u32, Vec<Lifespan>> = BTreeMap::new();
    for (chain_id, k) in candidates {
        let Some(chain) = index.chain(chain_id) else { continue };
        let Some(interval) = chain.transitions.get(k).and_then(|t| t.change_interval) else { continue };
        if let Some(d) = &query.domain {
            if !chain.canonical_url.host_has_suffix(d) {
                continue;
            }
        }
        if !interval.overlaps(query.from, query.to) {
            continue;
        }
        let (pre, post) = (&chain.versions[k], &chain.versions[k + 1]);
        let before = occurrences(&pre.doc, &tokens);
        let after = occurrences(&post.doc, &tokens);
        let (from, to) = match side {
            Side::Deleted => (before, after),
            Side::Added => (after, before),
        };
        // `from` is the count on the side where the text was; `to` where it went.
        if to >= from || (to > 0 && !query.include_partial) {
            continue;
        }
        let runs = lifespans.entry(chain_id).or_insert_with(|| lifespans_by(chain, |d| occurrences(d, &tokens)));
        let in_run = match side {
            Side::Deleted => k,
            Side::Added => k + 1,
        };
        let lifespan = *runs.iter().find(|l| l.contains_version(in_run)).expect("present in its run");
        let addition_version = match (side, lifespan.added) {
            (Side::Deleted, LifespanBound::Between(_)) => Some(VersionRef::of(&chain.versions[lifespan.first_version])),
            _ => None,
        };
        hits.push(SearchHit {
            canonical_url: chain.canonical_url.clone(),
            chain_id,
            transition: k,
            pre_change: VersionRef::of(pre),
            post_change: VersionRef::of(post),
            addition_version,
            change_interval: interval,
            lifespan,
            partial: to > 0,
            count_before: before,
            count_after: after,
            delta: from - to,
            snippet: make_snippet(&pre.doc, &post.doc, &tokens, options.snippet_context, side),
            rank: 0,
        });
    }
    rank_hits(&mut hits);
    Ok(hits)
}

/// Transitions that may hold a match. Single terms and bigrams read the
/// change fields directly; longer phrases take every transition whose
/// source version contains all phrase tokens, and are verified by the
/// caller with positional counts.
fn candidate_transitions(index: &ChangeIndex, tokens: &[String], side: Side, partial: bool) -> BTreeSet<(u32, usize)> {
    let fields: &[Field] = match (tokens.len(), side, partial) {
        (1, Side::Deleted, true) => &[Field::Deleted, Field::PartiallyDeleted],
        (1, Side::Deleted, false) => &[Field::Deleted],
        (1, Side::Added, true) => &[Field::Added, Field::PartiallyAdded],
        (1, Side::Added, false) => &[Field::Added],
        (2, Side::Deleted, true) => &[Field::DeletedBigram, Field::PartiallyDeletedBigram],
        (2, Side::Deleted, false) => &[Field::DeletedBigram],
        (2, Side::Added, true) => &[Field::AddedBigram, Field::PartiallyAddedBigram],
        (2, Side::Added, false) => &[Field::AddedBigram],
        _ => return long_phrase_candidates(index, tokens, side),
    };
    let term = if tokens.len() == 1 { tokens[0].clone() } else { bigram_term(&tokens[0], &tokens[1]) };
    fields
        .iter()
        .flat_map(|f| index.lookup(*f, &term))
        .map(|p| (p.chain_id, p.ordinal as usize))
        .collect()
}

fn long_phrase_candidates(index: &ChangeIndex, tokens: &[String], side: Side) -> BTreeSet<(u32, usize)> {
    let distinct: BTreeSet<&String> = tokens.iter().collect();
    let mut lists: Vec<_> = distinct.iter().map(|t| index.lookup(Field::Text, t)).collect();
    lists.sort_by_key(|l| l.len());
    let Some((first, rest)) = lists.split_first() else { return BTreeSet::new() };
    let mut versions: BTreeSet<(u32, u32)> = first.iter().map(|p| (p.chain_id, p.ordinal)).collect();
    for l in rest {
        let here: BTreeSet<(u32, u32)> = l.iter().map(|p| (p.chain_id, p.ordinal)).collect();
        versions.retain(|v| here.contains(v));
    }
    versions
        .into_iter()
        .filter_map(|(c, v)| {
            let chain = index.chain(c)?;
            let k = match side {
                Side::Deleted => v as usize,
                Side::Added => (v as usize).checked_sub(1)?,
            };
            (k < chain.transitions.len()).then_some((c, k))
        })
        .collect()
}

/// Pages matched by a query, in first-hit order, with their hits.
pub fn group_by_page(hits: &[SearchHit]) -> Vec<(&CanonicalUrl, Vec<&SearchHit>)> {
    let mut order: Vec<(&CanonicalUrl, Vec<&SearchHit>)> = Vec::new();
    for h in hits {
        match order.iter_mut().find(|(u, _)| *u == &h.canonical_url) {
            Some((_, list)) => list.push(h),
            None => order.push((&h.canonical_url, vec![h])),
        }
    }
    order
}

/// Chain lookup by URL text (canonicalized first).
pub fn find_chain<'a>(index: &'a ChangeIndex, url: &str) -> Option<&'a VersionChain> {
    let canon = crate::ingest::canonicalize_url(url).ok()?;
    index.chain_by_url(&canon)
}
