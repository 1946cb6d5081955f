//! Token diffs, the sliding version-by-version diff and the animated merged
//! replay document.

mod animation;
mod myers;

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::temporal::VersionChain;

pub use animation::{build_animation, plan_animation, AnimationChange, AnimationError, AnimationPlan, AnimationTiming, MergedSegment, SegmentKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum RegionKind {
    Keep,
    Delete,
    Insert,
    Replace,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Region<T> {
    pub kind: RegionKind,
    pub a: Range<usize>,
    pub b: Range<usize>,
    /// Tokens removed from `a`; empty for keep and insert regions.
    pub deleted: Vec<T>,
    /// Tokens added from `b`; empty for keep and delete regions.
    pub inserted: Vec<T>,
}

impl<T> Region<T> {
    pub fn is_change(&self) -> bool {
        self.kind != RegionKind::Keep
    }
}

/// Regions covering both sequences in order. Keep regions alternate with
/// change regions; adjacent deletes and inserts are merged into one
/// replace region.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditScript<T> {
    pub regions: Vec<Region<T>>,
}

impl<T: Clone> EditScript<T> {
    /// Rebuilds `b` from `a`.
    pub fn apply(&self, a: &[T]) -> Vec<T> {
        let mut out = Vec::new();
        for r in &self.regions {
            match r.kind {
                RegionKind::Keep => out.extend_from_slice(&a[r.a.clone()]),
                _ => out.extend(r.inserted.iter().cloned()),
            }
        }
        out
    }

    pub fn deleted_count(&self) -> usize {
        self.regions.iter().map(|r| r.deleted.len()).sum()
    }

    pub fn inserted_count(&self) -> usize {
        self.regions.iter().map(|r| r.inserted.len()).sum()
    }

    /// Number of tokens deleted plus inserted.
    pub fn edit_length(&self) -> usize {
        self.deleted_count() + self.inserted_count()
    }

    pub fn has_changes(&self) -> bool {
        self.regions.iter().any(Region::is_change)
    }

    pub fn change_regions(&self) -> impl Iterator<Item = (usize, &Region<T>)> {
        self.regions.iter().enumerate().filter(|(_, r)| r.is_change())
    }
}

/// Minimal LCS-based edit script from `a` to `b`.
pub fn token_diff<T: Clone + Eq>(a: &[T], b: &[T]) -> EditScript<T> {
    let mut regions: Vec<Region<T>> = Vec::new();
    for (a_range, b_range, keep) in myers::diff_ops(a, b) {
        match regions.last_mut() {
            Some(last) if last.is_change() != keep => {
                last.a.end = a_range.end;
                last.b.end = b_range.end;
            }
            _ => regions.push(Region {
                kind: if keep { RegionKind::Keep } else { RegionKind::Replace },
                a: a_range,
                b: b_range,
                deleted: Vec::new(),
                inserted: Vec::new(),
            }),
        }
    }
    for r in &mut regions {
        if r.kind == RegionKind::Keep {
            continue;
        }
        r.deleted = a[r.a.clone()].to_vec();
        r.inserted = b[r.b.clone()].to_vec();
        r.kind = match (r.deleted.is_empty(), r.inserted.is_empty()) {
            (false, true) => RegionKind::Delete,
            (true, false) => RegionKind::Insert,
            _ => RegionKind::Replace,
        };
    }
    EditScript { regions }
}

/// One step of the sliding diff between consecutive versions.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SlideEntry {
    pub from_version: usize,
    pub to_version: usize,
    pub script: EditScript<String>,
    /// No term or bigram count changed (reorder-only transition).
    pub identical: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SlidingSequence {
    pub entries: Vec<SlideEntry>,
    pub first_version: usize,
    pub last_version: usize,
}

pub fn sliding_entry(chain: &VersionChain, transition: usize) -> Option<SlideEntry> {
    let from = chain.versions.get(transition)?;
    let to = chain.versions.get(transition + 1)?;
    Some(SlideEntry {
        from_version: transition,
        to_version: transition + 1,
        script: token_diff(&from.doc.tokens, &to.doc.tokens),
        identical: chain.transitions[transition].is_empty(),
    })
}

pub fn sliding_sequence(chain: &VersionChain) -> SlidingSequence {
    let entries = (0..chain.versions.len().saturating_sub(1))
        .filter_map(|k| sliding_entry(chain, k))
        .collect();
    SlidingSequence { entries, first_version: 0, last_version: chain.versions.len().saturating_sub(1) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Exhaustive LCS table; the minimal edit length is `n + m - 2 * lcs`.
    fn lcs_len(a: &[u8], b: &[u8]) -> usize {
        let mut t = vec![vec![0usize; b.len() + 1]; a.len() + 1];
        for i in (0..a.len()).rev() {
            for j in (0..b.len()).rev() {
                t[i][j] = if a[i] == b[j] { t[i + 1][j + 1] + 1 } else { t[i + 1][j].max(t[i][j + 1]) };
            }
        }
        t[0][0]
    }

    fn check_tiling<T>(s: &EditScript<T>, n: usize, m: usize) {
        let (mut i, mut j) = (0, 0);
        for r in &s.regions {
            assert_eq!((r.a.start, r.b.start), (i, j));
            if r.kind == RegionKind::Keep {
                assert_eq!(r.a.len(), r.b.len());
            }
            i = r.a.end;
            j = r.b.end;
        }
        assert_eq!((i, j), (n, m));
        for w in s.regions.windows(2) {
            assert_ne!(w[0].is_change(), w[1].is_change(), "adjacent regions must alternate");
        }
    }

    #[test]
    fn identity() {
        let a = ["x", "y", "z"];
        let s = token_diff(&a, &a);
        assert_eq!(s.regions.len(), 1);
        assert_eq!(s.regions[0].kind, RegionKind::Keep);
    }

    #[test]
    fn single_delete() {
        let s = token_diff(&["x"], &[] as &[&str]);
        assert_eq!(s.regions.len(), 1);
        assert_eq!(s.regions[0].kind, RegionKind::Delete);
        assert_eq!(s.regions[0].deleted, ["x"]);
    }

    #[test]
    fn replace_merging() {
        let s = token_diff(&["a", "b", "c"], &["a", "x", "c"]);
        let kinds: Vec<_> = s.regions.iter().map(|r| r.kind).collect();
        assert_eq!(kinds, [RegionKind::Keep, RegionKind::Replace, RegionKind::Keep]);
        assert_eq!(s.regions[1].deleted, ["b"]);
        assert_eq!(s.regions[1].inserted, ["x"]);
    }

    #[test]
    fn empty_inputs() {
        let s = token_diff::<u8>(&[], &[]);
        assert!(s.regions.is_empty());
        assert!(s.apply(&[]).is_empty());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]
        #[test]
        fn minimal_and_applicable(a in prop::collection::vec(0u8..4, 0..=12), b in prop::collection::vec(0u8..4, 0..=12)) {
            let s = token_diff(&a, &b);
            prop_assert_eq!(s.apply(&a), b.clone());
            prop_assert_eq!(s.edit_length(), a.len() + b.len() - 2 * lcs_len(&a, &b));
            check_tiling(&s, a.len(), b.len());
            let swapped = token_diff(&b, &a);
            prop_assert_eq!(swapped.deleted_count(), s.inserted_count());
            prop_assert_eq!(swapped.inserted_count(), s.deleted_count());
        }

        #[test]
        fn self_diff_is_one_keep(a in prop::collection::vec(0u8..4, 1..20)) {
            let s = token_diff(&a, &a);
            prop_assert_eq!(s.regions.len(), 1);
            prop_assert_eq!(s.regions[0].kind, RegionKind::Keep);
        }
    }
}
