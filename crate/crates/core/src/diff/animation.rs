//! Merged replay of two versions of a page.
//!
//! The visible words of both versions are diffed. The post version's markup
//! is kept as the page skeleton: inserted words are wrapped in green spans
//! where they stand, and deleted words are re-inserted as red spans in front
//! of the post word they preceded. An embedded script then walks the changes
//! in document order, erasing each deletion (letter by letter for the first
//! three words, whole words after that) and typing each insertion.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{token_diff, RegionKind};
use crate::extract::visible_segments;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AnimationError {
    #[error("neither version has visible text")]
    EmptyDocuments,
}

/// Delays in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AnimationTiming {
    pub letter_ms: u32,
    pub word_ms: u32,
    pub pause_ms: u32,
}

impl Default for AnimationTiming {
    fn default() -> Self {
        Self { letter_ms: 30, word_ms: 120, pause_ms: 1500 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum SegmentKind {
    Keep,
    Delete,
    Insert,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MergedSegment {
    pub kind: SegmentKind,
    pub text: String,
    pub change: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AnimationChange {
    pub index: usize,
    /// Index of the post-version word the change is anchored before
    /// (equal to the word count for changes at the very end).
    pub anchor: usize,
    pub deleted: Vec<String>,
    pub inserted: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AnimationPlan {
    pub blocks: Vec<Vec<MergedSegment>>,
    pub changes: Vec<AnimationChange>,
    pub timing: AnimationTiming,
}

#[derive(Debug, Clone)]
struct Word {
    span: Range<usize>,
    text: String,
    block: usize,
    node: usize,
}

fn visible_words(src: &str) -> (Vec<Word>, Vec<Range<usize>>) {
    let (segments, scripts) = visible_segments(src);
    let mut words = Vec::new();
    for (node, seg) in segments.iter().enumerate() {
        let raw = &src[seg.span.clone()];
        let mut offset = 0;
        for piece in raw.split(|c: char| c.is_ascii_whitespace()) {
            if !piece.is_empty() {
                let text = html_escape::decode_html_entities(piece).into_owned();
                let start = seg.span.start + offset;
                if !text.trim().is_empty() {
                    words.push(Word { span: start..start + piece.len(), text, block: seg.block, node });
                }
            }
            offset += piece.len() + 1;
        }
    }
    (words, scripts)
}

struct Merge {
    plan: AnimationPlan,
    post: Vec<Word>,
    scripts: Vec<Range<usize>>,
    /// change index of every inserted post word
    inserted_by: Vec<Option<usize>>,
    /// deletions keyed by the post word they precede
    deletions_at: BTreeMap<usize, Vec<(usize, String)>>,
}

fn merge(pre_html: &[u8], post_html: &[u8], timing: AnimationTiming) -> Result<(Merge, String), AnimationError> {
    let pre_src = String::from_utf8_lossy(pre_html);
    let post_src = String::from_utf8_lossy(post_html).into_owned();
    let (pre, _) = visible_words(&pre_src);
    let (post, scripts) = visible_words(&post_src);
    if pre.is_empty() && post.is_empty() {
        return Err(AnimationError::EmptyDocuments);
    }
    let a: Vec<&str> = pre.iter().map(|w| w.text.as_str()).collect();
    let b: Vec<&str> = post.iter().map(|w| w.text.as_str()).collect();
    let script = token_diff(&a, &b);

    let block_of = |j: usize| post.get(j).or(post.last()).map_or(0, |w| w.block);
    let mut changes = Vec::new();
    let mut inserted_by = vec![None; post.len()];
    let mut deletions_at: BTreeMap<usize, Vec<(usize, String)>> = BTreeMap::new();
    let mut flat: Vec<(usize, MergedSegment)> = Vec::new();

    for region in &script.regions {
        if region.kind == RegionKind::Keep {
            for j in region.b.clone() {
                flat.push((block_of(j), MergedSegment { kind: SegmentKind::Keep, text: post[j].text.clone(), change: None }));
            }
            continue;
        }
        let index = changes.len();
        let anchor = region.b.start;
        if !region.deleted.is_empty() {
            let text = region.deleted.join(" ");
            deletions_at.entry(anchor).or_default().push((index, text.clone()));
            flat.push((block_of(anchor), MergedSegment { kind: SegmentKind::Delete, text, change: Some(index) }));
        }
        for j in region.b.clone() {
            inserted_by[j] = Some(index);
            flat.push((block_of(j), MergedSegment { kind: SegmentKind::Insert, text: post[j].text.clone(), change: Some(index) }));
        }
        changes.push(AnimationChange {
            index,
            anchor,
            deleted: region.deleted.iter().map(|s| s.to_string()).collect(),
            inserted: region.inserted.iter().map(|s| s.to_string()).collect(),
        });
    }

    // group by block, joining adjacent words of the same kind and change
    let mut blocks: Vec<Vec<MergedSegment>> = Vec::new();
    let mut last_block = None;
    for (block, seg) in flat {
        if last_block != Some(block) {
            blocks.push(Vec::new());
            last_block = Some(block);
        }
        let current = blocks.last_mut().expect("pushed above");
        match current.last_mut() {
            Some(prev) if prev.kind == seg.kind && prev.change == seg.change => {
                prev.text.push(' ');
                prev.text.push_str(&seg.text);
            }
            _ => current.push(seg),
        }
    }

    Ok((
        Merge { plan: AnimationPlan { blocks, changes, timing }, post, scripts, inserted_by, deletions_at },
        post_src,
    ))
}

/// The merged block list and ordered change list for two versions.
pub fn plan_animation(pre_html: &[u8], post_html: &[u8], timing: AnimationTiming) -> Result<AnimationPlan, AnimationError> {
    merge(pre_html, post_html, timing).map(|(m, _)| m.plan)
}

/// A standalone HTML document that replays the change from `pre_html` to
/// `post_html`.
pub fn build_animation(pre_html: &[u8], post_html: &[u8], timing: AnimationTiming) -> Result<Vec<u8>, AnimationError> {
    let (m, src) = merge(pre_html, post_html, timing)?;
    Ok(render(&m, &src).into_bytes())
}

fn render(m: &Merge, src: &str) -> String {
    let mut out = String::with_capacity(src.len() + 4096);
    let mut cursor = 0usize;
    let copy = |out: &mut String, from: usize, to: usize| {
        let mut at = from;
        for s in &m.scripts {
            if s.end <= at || s.start >= to {
                continue;
            }
            out.push_str(&src[at..s.start.max(at)]);
            at = s.end.min(to);
        }
        if at < to {
            out.push_str(&src[at..to]);
        }
    };
    let emit_deletions = |out: &mut String, at: usize| {
        if let Some(dels) = m.deletions_at.get(&at) {
            for (change, text) in dels {
                let _ = write!(
                    out,
                    "<span class=\"cd-del\" data-change=\"{change}\">{} </span>",
                    html_escape::encode_text(text)
                );
            }
        }
    };

    let n = m.post.len();
    for (j, word) in m.post.iter().enumerate() {
        if m.deletions_at.contains_key(&j) {
            copy(&mut out, cursor, word.span.start);
            cursor = word.span.start;
            emit_deletions(&mut out, j);
        }
        if let Some(change) = m.inserted_by[j] {
            let opens = j == 0 || m.inserted_by[j - 1] != Some(change) || m.post[j - 1].node != word.node;
            let closes = j + 1 == n || m.inserted_by[j + 1] != Some(change) || m.post[j + 1].node != word.node;
            if opens {
                copy(&mut out, cursor, word.span.start);
                cursor = word.span.start;
                let _ = write!(out, "<span class=\"cd-ins\" data-change=\"{change}\">");
            }
            if closes {
                copy(&mut out, cursor, word.span.end);
                cursor = word.span.end;
                out.push_str("</span>");
            }
        }
    }

    let body_close = find_last_ci(src, "</body").filter(|&i| i >= cursor);
    if m.deletions_at.contains_key(&n) {
        let at = m.post.last().map_or_else(|| body_close.unwrap_or(src.len()), |w| w.span.end);
        copy(&mut out, cursor, at);
        cursor = at;
        emit_deletions(&mut out, n);
    }
    let assets_at = body_close.filter(|&i| i >= cursor).unwrap_or(src.len());
    copy(&mut out, cursor, assets_at);
    out.push_str(&assets(&m.plan));
    copy(&mut out, assets_at, src.len());
    out
}

fn find_last_ci(hay: &str, needle: &str) -> Option<usize> {
    hay.to_ascii_lowercase().rfind(needle)
}

const STYLE: &str = ".cd-del{background:#ffd7d5;color:#82071e;text-decoration:line-through}\
.cd-ins{background:#ccffd8;color:#055d20}";

const SCRIPT: &str = r#"(function () {
  var plan = JSON.parse(document.getElementById("chronodiff-plan").textContent);
  var t = plan.timing;
  var log = (window.chronodiffLog = []);
  function sleep(ms) { return new Promise(function (r) { setTimeout(r, ms); }); }
  function spans(kind, change) {
    return Array.prototype.slice.call(document.querySelectorAll("." + kind + '[data-change="' + change + '"]'));
  }
  Array.prototype.forEach.call(document.querySelectorAll(".cd-ins"), function (s) {
    s.setAttribute("data-text", s.textContent);
    s.textContent = "";
  });
  async function erase(span, change) {
    var words = span.textContent.split(/\s+/).filter(Boolean);
    for (var i = 0; i < words.length; i++) {
      if (i < 3) {
        for (var k = words[i].length; k > 0; k--) {
          words[i] = words[i].slice(0, k - 1);
          span.textContent = words.slice(i).join(" ");
          await sleep(t.letterMs);
        }
      } else {
        span.textContent = words.slice(i + 1).join(" ");
        await sleep(t.wordMs);
      }
      log.push({ change: change, kind: "delete", word: i });
    }
    span.textContent = "";
  }
  async function type(span, change) {
    var text = span.getAttribute("data-text") || "";
    for (var k = 1; k <= text.length; k++) {
      span.textContent = text.slice(0, k);
      await sleep(t.letterMs);
    }
    log.push({ change: change, kind: "insert" });
  }
  async function run() {
    for (var c = 0; c < plan.changes.length; c++) {
      var change = plan.changes[c].index;
      var dels = spans("cd-del", change), ins = spans("cd-ins", change);
      var first = dels[0] || ins[0];
      if (first && first.scrollIntoView) first.scrollIntoView({ behavior: "smooth", block: "center" });
      log.push({ change: change, kind: "visit" });
      for (var i = 0; i < dels.length; i++) await erase(dels[i], change);
      for (var j = 0; j < ins.length; j++) await type(ins[j], change);
      await sleep(t.pauseMs);
    }
    log.push({ kind: "done" });
  }
  window.addEventListener("message", function (e) {
    if (e.data === "chronodiff:restart") location.reload();
  });
  if (document.readyState === "loading") document.addEventListener("DOMContentLoaded", run);
  else run();
})();"#;

fn assets(plan: &AnimationPlan) -> String {
    let json = serde_json::to_string(plan).expect("plan serializes").replace("</", "<\\/");
    format!(
        "<style id=\"chronodiff-style\">{STYLE}</style>\n<script type=\"application/json\" id=\"chronodiff-plan\">{json}</script>\n<script id=\"chronodiff-player\">{SCRIPT}</script>\n"
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    const FWS_PRE: &str = "<html><head><title>Permits</title><script src=\"x.js\"></script></head><body>\
<nav>Home | About</nav>\
<h1>Permits</h1>\
<p>Applications for endangered species permits are reviewed here.</p>\
<p><img src=\"seal.png\" alt=\"seal\"> Contact the permit office.</p>\
</body></html>";
    const FWS_POST: &str = "<html><head><title>Permits</title><script src=\"x.js\"></script></head><body>\
<nav>Home | About</nav>\
<h1>Permits</h1>\
<p>Applications for permits are reviewed here.</p>\
<p><img src=\"seal.png\" alt=\"seal\"> Contact the permit office.</p>\
</body></html>";

    #[test]
    fn phrase_deletion() {
        let plan = plan_animation(FWS_PRE.as_bytes(), FWS_POST.as_bytes(), AnimationTiming::default()).unwrap();
        assert_eq!(plan.changes.len(), 1);
        assert_eq!(plan.changes[0].deleted, ["endangered", "species"]);
        assert!(plan.changes[0].inserted.is_empty());

        let doc = String::from_utf8(build_animation(FWS_PRE.as_bytes(), FWS_POST.as_bytes(), AnimationTiming::default()).unwrap()).unwrap();
        assert!(doc.contains("<span class=\"cd-del\" data-change=\"0\">endangered species </span>permits"));
        assert!(doc.contains("<img src=\"seal.png\" alt=\"seal\">"), "unchanged content stays in place");
        assert!(!doc.contains("x.js"), "page scripts are dropped");
        assert!(doc.contains("id=\"chronodiff-player\""));
        let player = doc.find("chronodiff-player").unwrap();
        assert!(player < doc.rfind("</body>").unwrap());
    }

    #[test]
    fn identical_versions_render_static() {
        let plan = plan_animation(FWS_POST.as_bytes(), FWS_POST.as_bytes(), AnimationTiming::default()).unwrap();
        assert!(plan.changes.is_empty());
        let doc = String::from_utf8(build_animation(FWS_POST.as_bytes(), FWS_POST.as_bytes(), AnimationTiming::default()).unwrap()).unwrap();
        assert!(!doc.contains("class=\"cd-"));
    }

    #[test]
    fn empty_documents() {
        let err = build_animation(b"<html></html>", b"<p> </p>", AnimationTiming::default()).unwrap_err();
        assert_eq!(err, AnimationError::EmptyDocuments);
    }

    // deletion in the first paragraph, insertion in the second: two changes,
    // deletion first, matching the order of the token diff regions
    #[test]
    fn deletion_then_insertion_in_document_order() {
        let pre = "<body><p>alpha beta gamma</p><p>delta epsilon</p></body>";
        let post = "<body><p>alpha gamma</p><p>delta new words epsilon</p></body>";
        let plan = plan_animation(pre.as_bytes(), post.as_bytes(), AnimationTiming::default()).unwrap();
        let a: Vec<&str> = "alpha beta gamma delta epsilon".split(' ').collect();
        let b: Vec<&str> = "alpha gamma delta new words epsilon".split(' ').collect();
        let regions: Vec<_> = token_diff(&a, &b).regions.into_iter().filter(|r| r.is_change()).collect();
        assert_eq!(plan.changes.len(), 2);
        assert_eq!(regions.len(), 2);
        assert_eq!(plan.changes[0].deleted, ["beta"]);
        assert_eq!(plan.changes[1].inserted, ["new", "words"]);
        assert!(plan.changes[0].anchor < plan.changes[1].anchor);
        for (c, r) in plan.changes.iter().zip(&regions) {
            assert_eq!(c.anchor, r.b.start);
        }
        let doc = String::from_utf8(build_animation(pre.as_bytes(), post.as_bytes(), AnimationTiming::default()).unwrap()).unwrap();
        let del = doc.find("class=\"cd-del\"").unwrap();
        let ins = doc.find("class=\"cd-ins\"").unwrap();
        assert!(del < ins);
        assert!(doc.contains("<p>delta <span class=\"cd-ins\" data-change=\"1\">new words</span> epsilon</p>"));
        assert_eq!(plan.blocks.len(), 2);
    }

    #[test]
    fn replace_is_one_change_and_tail_deletion_anchors_at_end() {
        let pre = "<p>keep old</p><p>gone at end</p>";
        let post = "<p>keep new</p>";
        let plan = plan_animation(pre.as_bytes(), post.as_bytes(), AnimationTiming::default()).unwrap();
        assert_eq!(plan.changes.len(), 1);
        assert_eq!(plan.changes[0].deleted, ["old", "gone", "at", "end"]);
        assert_eq!(plan.changes[0].inserted, ["new"]);
        let doc = String::from_utf8(build_animation(pre.as_bytes(), post.as_bytes(), AnimationTiming::default()).unwrap()).unwrap();
        assert!(doc.starts_with("<p>keep <span class=\"cd-del\" data-change=\"0\">old gone at end </span><span class=\"cd-ins\" data-change=\"0\">new</span></p>"));
    }

    #[test]
    fn change_count_matches_script_regions() {
        let pre = "<p>a b c d e f</p>";
        let post = "<p>a x c e f g</p>";
        let plan = plan_animation(pre.as_bytes(), post.as_bytes(), AnimationTiming::default()).unwrap();
        let a: Vec<&str> = "a b c d e f".split(' ').collect();
        let b: Vec<&str> = "a x c e f g".split(' ').collect();
        assert_eq!(plan.changes.len(), token_diff(&a, &b).change_regions().count());
        let segs = plan.blocks.iter().flatten().filter(|s| s.change.is_some());
        for s in segs {
            assert!(s.change.unwrap() < plan.changes.len());
        }
    }

    #[test]
    fn plan_json_cannot_close_script() {
        let pre = "<p>x &lt;/script&gt; y</p>";
        let post = "<p>x y</p>";
        let doc = String::from_utf8(build_animation(pre.as_bytes(), post.as_bytes(), AnimationTiming::default()).unwrap()).unwrap();
        let plan_start = doc.find("id=\"chronodiff-plan\">").unwrap();
        let plan_end = doc[plan_start..].find("</script>").unwrap() + plan_start;
        assert!(!doc[plan_start..plan_end].contains("</script"));
    }
}
