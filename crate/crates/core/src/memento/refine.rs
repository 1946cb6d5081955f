use thiserror::Error;

use crate::extract::{extract_text, tokenize};
use crate::replay::StoredCapture;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RefineError {
    #[error("term count is {0} at both ends")]
    NoChange(u32),
    /// A probe saw a count matching neither endpoint. The straddle found
    /// so far is still reported.
    #[error("term state changes more than once; first straddle {pre}..{post}")]
    NonMonotone { pre: usize, post: usize, fetches: usize },
    #[error("version range {lo}..{hi} is invalid for {len} candidates")]
    InvalidRange { lo: usize, hi: usize, len: usize },
    #[error("fetch failed: {0}")]
    Fetch(String),
}

/// A datetime-ordered list of candidate versions that can be fetched.
pub trait VersionOracle {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// HTML body of candidate `i`.
    fn fetch(&mut self, i: usize) -> Result<Vec<u8>, String>;
}

/// Oracle over stored capture bodies.
pub struct ReplayOracle<'a> {
    pub captures: &'a [StoredCapture],
}

impl VersionOracle for ReplayOracle<'_> {
    fn len(&self) -> usize {
        self.captures.len()
    }

    fn fetch(&mut self, i: usize) -> Result<Vec<u8>, String> {
        self.captures.get(i).map(|c| c.body.to_vec()).ok_or_else(|| format!("no candidate {i}"))
    }
}

/// Occurrences of `tokens` as adjacent tokens within one text block.
pub fn count_in_html(html: &[u8], tokens: &[String]) -> u32 {
    let mut n = 0;
    for block in extract_text(html) {
        let toks = tokenize(&block);
        n += toks.windows(tokens.len().max(1)).filter(|w| *w == tokens).count() as u32;
    }
    n
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Refinement {
    pub pre: usize,
    pub post: usize,
    pub fetches: usize,
}

/// Narrows a known change between candidates `lo` and `hi` to adjacent
/// candidates by bisection. The endpoint counts are supplied by the caller
/// and are not refetched, so at most `ceil(log2(k + 1))` fetches are made
/// for `k` intermediate candidates.
pub fn refine_change_interval(
    oracle: &mut dyn VersionOracle,
    term: &str,
    lo: usize,
    hi: usize,
    lo_count: u32,
    hi_count: u32,
) -> Result<Refinement, RefineError> {
    if lo >= hi || hi >= oracle.len() {
        return Err(RefineError::InvalidRange { lo, hi, len: oracle.len() });
    }
    if lo_count == hi_count {
        return Err(RefineError::NoChange(lo_count));
    }
    let tokens = tokenize(term);
    let (mut lo, mut hi) = (lo, hi);
    let mut fetches = 0;
    let mut non_monotone = false;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let body = oracle.fetch(mid).map_err(RefineError::Fetch)?;
        fetches += 1;
        let c = count_in_html(&body, &tokens);
        if c == lo_count {
            lo = mid;
        } else {
            non_monotone |= c != hi_count;
            hi = mid;
        }
    }
    if non_monotone {
        return Err(RefineError::NonMonotone { pre: lo, post: hi, fetches });
    }
    Ok(Refinement { pre: lo, post: hi, fetches })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Pages {
        bodies: Vec<String>,
        fetched: usize,
    }

    impl VersionOracle for Pages {
        fn len(&self) -> usize {
            self.bodies.len()
        }

        fn fetch(&mut self, i: usize) -> Result<Vec<u8>, String> {
            self.fetched += 1;
            Ok(self.bodies[i].clone().into_bytes())
        }
    }

    fn flip_chain(k: usize, flip: usize) -> Pages {
        let bodies = (0..k + 2)
            .map(|i| if i <= flip { format!("<p>version {i} pollution</p>") } else { format!("<p>version {i}</p>") })
            .collect();
        Pages { bodies, fetched: 0 }
    }

    #[test]
    fn fourteen_intermediates() {
        for flip in 0..=14 {
            let mut p = flip_chain(14, flip);
            let r = refine_change_interval(&mut p, "pollution", 0, 15, 1, 0).unwrap();
            assert_eq!((r.pre, r.post), (flip, flip + 1));
            assert!(r.fetches <= 4);
            assert_eq!(p.fetched, r.fetches);
        }
    }

    #[test]
    fn adjacent_endpoints() {
        let mut p = flip_chain(0, 0);
        assert_eq!(refine_change_interval(&mut p, "pollution", 0, 1, 1, 0).unwrap(), Refinement { pre: 0, post: 1, fetches: 0 });
    }

    #[test]
    fn equal_counts() {
        let mut p = flip_chain(3, 1);
        assert_eq!(refine_change_interval(&mut p, "pollution", 0, 1, 1, 1), Err(RefineError::NoChange(1)));
        assert!(matches!(refine_change_interval(&mut p, "pollution", 2, 9, 1, 0), Err(RefineError::InvalidRange { .. })));
    }

    #[test]
    fn flip_back_is_reported() {
        let mut p = Pages {
            bodies: ["a b", "a", "a b b", "a b b", "a"].iter().map(|s| format!("<p>{s}</p>")).collect(),
            fetched: 0,
        };
        match refine_change_interval(&mut p, "b", 0, 4, 1, 0) {
            Err(RefineError::NonMonotone { pre, post, .. }) => assert_eq!(post, pre + 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn phrase_counts() {
        assert_eq!(count_in_html(b"<p>endangered species</p><p>species endangered</p>", &tokenize("endangered species")), 1);
    }
}
