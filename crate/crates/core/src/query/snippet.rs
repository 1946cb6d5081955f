use serde::{Deserialize, Serialize};

use crate::diff::{token_diff, Region};
use crate::extract::ExtractedDoc;

pub const DEFAULT_CONTEXT: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Mark {
    Kept,
    Added,
    Deleted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnippetToken {
    pub text: String,
    pub mark: Mark,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Snippet {
    pub leading_ellipsis: bool,
    pub tokens: Vec<SnippetToken>,
    pub trailing_ellipsis: bool,
}

impl Snippet {
    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn marked(&self, mark: Mark) -> impl Iterator<Item = &str> {
        self.tokens.iter().filter(move |t| t.mark == mark).map(|t| t.text.as_str())
    }
}

/// Which side of the diff the query is about.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Deleted,
    Added,
}

/// Diff snippet around the first change region that removes (or adds) a
/// query token, falling back to the largest region. Context tokens come
/// from the neighbouring unchanged text.
pub fn make_snippet<S: AsRef<str>>(
    pre: &ExtractedDoc,
    post: &ExtractedDoc,
    query: &[S],
    context: usize,
    side: Side,
) -> Snippet {
    let script = token_diff(&pre.tokens, &post.tokens);
    let regions = &script.regions;
    let touches = |r: &Region<String>| {
        let toks = match side {
            Side::Deleted => &r.deleted,
            Side::Added => &r.inserted,
        };
        toks.iter().any(|t| query.iter().any(|q| q.as_ref() == t))
    };
    let chosen = regions
        .iter()
        .position(|r| r.is_change() && touches(r))
        .or_else(|| {
            regions
                .iter()
                .enumerate()
                .filter(|(_, r)| r.is_change())
                .min_by_key(|(i, r)| (std::cmp::Reverse(r.deleted.len() + r.inserted.len()), *i))
                .map(|(i, _)| i)
        });
    let Some(i) = chosen else {
        return Snippet::default();
    };
    let region = &regions[i];

    let mut tokens = Vec::new();
    let mut start = region.a.start;
    if i > 0 {
        let keep = &regions[i - 1];
        start = keep.a.end - context.min(keep.a.len());
        tokens.extend(pre.tokens[start..keep.a.end].iter().map(|t| SnippetToken { text: t.clone(), mark: Mark::Kept }));
    }
    tokens.extend(region.deleted.iter().map(|t| SnippetToken { text: t.clone(), mark: Mark::Deleted }));
    tokens.extend(region.inserted.iter().map(|t| SnippetToken { text: t.clone(), mark: Mark::Added }));
    let mut end = region.a.end;
    if let Some(keep) = regions.get(i + 1) {
        end = keep.a.start + context.min(keep.a.len());
        tokens.extend(pre.tokens[keep.a.start..end].iter().map(|t| SnippetToken { text: t.clone(), mark: Mark::Kept }));
    }
    // Truncation also happens when the other sequence has text beyond the
    // window, so compare against both sides.
    let b_start = if i > 0 { regions[i - 1].b.end - (region.a.start - start) } else { region.b.start };
    let b_end = match regions.get(i + 1) {
        Some(_) => region.b.end + (end - region.a.end),
        None => region.b.end,
    };
    Snippet {
        leading_ellipsis: start > 0 || b_start > 0,
        tokens,
        trailing_ellipsis: end < pre.tokens.len() || b_end < post.tokens.len(),
    }
}
