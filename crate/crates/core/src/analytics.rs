//! Corpus-level deletion statistics and term categorization.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::index::{ChangeIndex, Field};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Weighting {
    /// Number of transitions that remove the term fully or partially.
    #[default]
    Transitions,
    /// Total occurrences removed.
    Occurrences,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DeletedTerm {
    pub term: String,
    pub deletion_doc_frequency: u64,
}

/// Terms ranked by deletion frequency, ties broken lexicographically.
pub fn top_deleted_terms(index: &ChangeIndex, n: usize, weighting: Weighting) -> Vec<DeletedTerm> {
    let mut freq: BTreeMap<&str, u64> = BTreeMap::new();
    for field in [Field::Deleted, Field::PartiallyDeleted] {
        for (term, list) in index.terms_in(field) {
            let w: u64 = match weighting {
                Weighting::Transitions => list.len() as u64,
                Weighting::Occurrences => list.iter().map(|p| p.payload.unsigned_abs()).sum(),
            };
            *freq.entry(term).or_default() += w;
        }
    }
    let mut ranked: Vec<DeletedTerm> = freq
        .into_iter()
        .map(|(t, f)| DeletedTerm { term: t.to_string(), deletion_doc_frequency: f })
        .collect();
    ranked.sort_by(|a, b| b.deletion_doc_frequency.cmp(&a.deletion_doc_frequency).then_with(|| a.term.cmp(&b.term)));
    ranked.truncate(n);
    ranked
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Stopword,
    Temporal,
    Seed,
    NewlyFound,
}

impl Category {
    pub const ALL: [Category; 4] = [Category::Stopword, Category::Temporal, Category::Seed, Category::NewlyFound];

    pub fn name(self) -> &'static str {
        match self {
            Category::Stopword => "stopword",
            Category::Temporal => "temporal",
            Category::Seed => "seed",
            Category::NewlyFound => "newly_found",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

const NUMBER_WORDS: [&str; 10] = ["one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten"];
const MONTHS: [&str; 12] = [
    "january", "february", "march", "april", "may", "june", "july", "august", "september", "october", "november", "december",
];
const UNITS: [&str; 3] = ["day", "month", "year"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemporalRules {
    /// Tokens made only of ASCII digits.
    pub digits: bool,
    /// Four-digit years in this range, used when `digits` is off.
    pub years: Option<(u32, u32)>,
    pub words: HashSet<String>,
}

impl Default for TemporalRules {
    fn default() -> Self {
        TemporalRules {
            digits: true,
            years: Some((1900, 2099)),
            words: NUMBER_WORDS.iter().chain(&MONTHS).chain(&UNITS).map(|s| s.to_string()).collect(),
        }
    }
}

impl TemporalRules {
    pub fn matches(&self, term: &str) -> bool {
        let all_digits = !term.is_empty() && term.bytes().all(|b| b.is_ascii_digit());
        if self.digits && all_digits {
            return true;
        }
        if let (Some((lo, hi)), true) = (self.years, all_digits && term.len() == 4) {
            if term.parse::<u32>().is_ok_and(|y| (lo..=hi).contains(&y)) {
                return true;
            }
        }
        self.words.contains(term)
    }
}

/// A small English stop list used when none is supplied.
pub const DEFAULT_STOPWORDS: &str = "a about above after again against all also am an and any are as at be because been before being below between both but by can could did do does doing down during each few for from further had has have having he her here hers herself him himself his how i if in into is it its itself just may me might more most must my myself no nor not now of off on once only or other our ours ourselves out over own same shall she should so some such than that the their theirs them themselves then there these they this those through to too under until up upon very was we were what when where which while who whom why will with within without would you your yours yourself yourselves";

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CategoryLists {
    pub stopwords: HashSet<String>,
    pub seeds: HashSet<String>,
    pub temporal: TemporalRules,
}

impl CategoryLists {
    pub fn with_default_stopwords(seeds: HashSet<String>) -> Self {
        CategoryLists { stopwords: parse_term_list(DEFAULT_STOPWORDS), seeds, temporal: TemporalRules::default() }
    }

    /// First matching rule in the order stopword, temporal, seed.
    pub fn categorize(&self, term: &str) -> Category {
        if self.stopwords.contains(term) {
            Category::Stopword
        } else if self.temporal.matches(term) {
            Category::Temporal
        } else if self.seeds.contains(term) {
            Category::Seed
        } else {
            Category::NewlyFound
        }
    }
}

/// Terms separated by whitespace, one or more per line; `#` starts a comment.
pub fn parse_term_list(text: &str) -> HashSet<String> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(str::split_whitespace)
        .map(str::to_lowercase)
        .collect()
}

pub fn load_term_list(path: &Path) -> io::Result<HashSet<String>> {
    Ok(parse_term_list(&std::fs::read_to_string(path)?))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TermCategory {
    pub term: String,
    pub category: Category,
    pub deletion_doc_frequency: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Categorization {
    pub terms: Vec<TermCategory>,
    pub histogram: BTreeMap<Category, usize>,
}

impl Categorization {
    pub fn count(&self, c: Category) -> usize {
        self.histogram.get(&c).copied().unwrap_or(0)
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        for c in Category::ALL {
            let examples: Vec<&str> =
                self.terms.iter().filter(|t| t.category == c).take(4).map(|t| t.term.as_str()).collect();
            out.push_str(&format!("{:<12}{:>5}  {}\n", c.name(), self.count(c), examples.join(", ")));
        }
        out
    }
}

pub fn categorize_terms(terms: &[DeletedTerm], lists: &CategoryLists) -> Categorization {
    let mut histogram: BTreeMap<Category, usize> = Category::ALL.iter().map(|c| (*c, 0)).collect();
    let terms = terms
        .iter()
        .map(|t| {
            let category = lists.categorize(&t.term);
            *histogram.entry(category).or_default() += 1;
            TermCategory { term: t.term.clone(), category, deletion_doc_frequency: t.deletion_doc_frequency }
        })
        .collect();
    Categorization { terms, histogram }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extract::ExtractedDoc;
    use crate::index::build_index;
    use crate::ingest::{canonicalize_url, MementoMeta};
    use crate::replay::ReplayStore;
    use crate::temporal::{build_chain, VersionChain};
    use chrono::{Duration, TimeZone, Utc};
    use proptest::prelude::*;

    fn chain(url: &str, texts: &[&str]) -> VersionChain {
        let docs = texts
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let meta = MementoMeta {
                    uri_r: format!("http://{url}"),
                    uri_m: None,
                    capture_datetime: Utc.with_ymd_and_hms(2016, 1, 1, 0, 0, 0).unwrap() + Duration::days(i as i64),
                    http_status: 200,
                    content_type: "text/html".into(),
                    source_archive: "local".into(),
                };
                ExtractedDoc::from_blocks(canonicalize_url(url).unwrap(), meta, vec![t.to_string()])
            })
            .collect();
        build_chain(docs).unwrap()
    }

    #[test]
    fn national_support_public() {
        let chains = vec![
            chain("a.gov/1", &["national support public x", "x"]),
            chain("a.gov/2", &["national support national", "national y"]),
            chain("a.gov/3", &["national public", "z"]),
        ];
        let idx = build_index(chains.clone(), ReplayStore::default()).unwrap();
        let top = top_deleted_terms(&idx, 3, Weighting::Transitions);
        let names: Vec<_> = top.iter().map(|t| t.term.as_str()).collect();
        assert_eq!(names, ["national", "public", "support"]);
        assert_eq!(top[0].deletion_doc_frequency, 3);

        // Brute-force recount over every transition.
        let mut brute: BTreeMap<String, u64> = BTreeMap::new();
        for c in &chains {
            for w in c.versions.windows(2) {
                for (t, n) in &w[0].doc.unigram_counts {
                    if w[1].doc.count(t) < *n {
                        *brute.entry(t.clone()).or_default() += 1;
                    }
                }
            }
        }
        let all = top_deleted_terms(&idx, usize::MAX, Weighting::Transitions);
        assert_eq!(all.len(), brute.len());
        for t in &all {
            assert_eq!(brute[&t.term], t.deletion_doc_frequency);
        }
        let occ = top_deleted_terms(&idx, 1, Weighting::Occurrences);
        assert_eq!((occ[0].term.as_str(), occ[0].deletion_doc_frequency), ("national", 3));
        assert!(top_deleted_terms(&build_index(vec![], ReplayStore::default()).unwrap(), 5, Weighting::Transitions).is_empty());
    }

    #[test]
    fn categories() {
        let lists = CategoryLists::with_default_stopwords(parse_term_list("climate\nclean # comment\nwater may"));
        for (t, c) in [
            ("about", Category::Stopword),
            ("more", Category::Stopword),
            ("which", Category::Stopword),
            ("2015", Category::Temporal),
            ("2", Category::Temporal),
            ("one", Category::Temporal),
            ("year", Category::Temporal),
            ("march", Category::Temporal),
            ("climate", Category::Seed),
            ("water", Category::Seed),
            ("may", Category::Stopword),
            ("greenhouse", Category::NewlyFound),
        ] {
            assert_eq!(lists.categorize(t), c, "{t}");
        }
        let no_digits = TemporalRules { digits: false, ..TemporalRules::default() };
        assert!(no_digits.matches("1999") && !no_digits.matches("2") && !no_digits.matches("2100"));
    }

    proptest! {
        #[test]
        fn histogram_and_permutation(terms in prop::collection::vec("[a-z0-9]{1,6}", 0..40), rot in 0usize..40) {
            let lists = CategoryLists::with_default_stopwords(parse_term_list("climate abc"));
            let input: Vec<DeletedTerm> = terms.iter().map(|t| DeletedTerm { term: t.clone(), deletion_doc_frequency: 1 }).collect();
            let out = categorize_terms(&input, &lists);
            prop_assert_eq!(out.histogram.values().sum::<usize>(), input.len());
            let mut rotated = input.clone();
            if !rotated.is_empty() {
                let r = rot % rotated.len();
                rotated.rotate_left(r);
                let out2 = categorize_terms(&rotated, &lists);
                let mut expected = out.terms.clone();
                expected.rotate_left(r);
                prop_assert_eq!(out2.terms, expected);
            }
        }
    }
}
