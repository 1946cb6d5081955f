//! Random corpora and a brute-force change scanner that shares no code with
//! the index or query engine.

#![allow(dead_code)]

use std::collections::BTreeSet;

use chrono::{DateTime, Duration, TimeZone, Utc};
use chronodiff::ingest::MementoRecord;
use chronodiff::query::ChangeType;
use rand::Rng;

pub type Blocks = Vec<Vec<String>>;

#[derive(Debug, Clone)]
pub struct Page {
    pub host: String,
    pub path: String,
    pub captures: Vec<(DateTime<Utc>, Blocks)>,
}

impl Page {
    pub fn uri(&self) -> String {
        format!("http://{}/{}", self.host, self.path)
    }

    pub fn canonical(&self) -> String {
        format!("{}/{}", self.host, self.path)
    }
}

pub fn vocabulary(n: usize) -> Vec<String> {
    // Letters only so the tokenizer returns words unchanged.
    (0..n)
        .map(|i| {
            let mut s = String::new();
            let mut x = i;
            loop {
                s.push((b'a' + (x % 26) as u8) as char);
                x /= 26;
                if x == 0 {
                    break;
                }
            }
            format!("w{s}")
        })
        .collect()
}

fn random_blocks(rng: &mut impl Rng, vocab: &[String]) -> Blocks {
    let nb = rng.gen_range(1..=3);
    (0..nb)
        .map(|_| {
            let len = rng.gen_range(0..=10);
            (0..len).map(|_| vocab[rng.gen_range(0..vocab.len())].clone()).collect()
        })
        .collect()
}

fn mutate(rng: &mut impl Rng, prev: &Blocks, vocab: &[String]) -> Blocks {
    let mut b = prev.clone();
    match rng.gen_range(0..6) {
        // Identical text, so the capture coalesces.
        0 => {}
        1 => return random_blocks(rng, vocab),
        _ => {
            for _ in 0..rng.gen_range(1..=3) {
                let bi = rng.gen_range(0..b.len());
                let block = &mut b[bi];
                match rng.gen_range(0..3) {
                    0 if !block.is_empty() => {
                        let i = rng.gen_range(0..block.len());
                        block.remove(i);
                    }
                    1 => {
                        let i = rng.gen_range(0..=block.len());
                        block.insert(i, vocab[rng.gen_range(0..vocab.len())].clone());
                    }
                    _ if !block.is_empty() => {
                        let i = rng.gen_range(0..block.len());
                        block[i] = vocab[rng.gen_range(0..vocab.len())].clone();
                    }
                    _ => {}
                }
            }
        }
    }
    b
}

/// `pages` random pages with 1..=`max_versions` captures each.
pub fn random_corpus(rng: &mut impl Rng, pages: usize, max_versions: usize, vocab_size: usize) -> Vec<Page> {
    let vocab = vocabulary(vocab_size);
    let hosts = ["alpha.gov", "www.alpha.gov", "beta.org", "gamma.beta.org", "delta.net"];
    let base = Utc.with_ymd_and_hms(2016, 1, 1, 0, 0, 0).unwrap();
    (0..pages)
        .map(|p| {
            let n = rng.gen_range(1..=max_versions);
            let mut t = base + Duration::hours(rng.gen_range(0..5000));
            let mut blocks = random_blocks(rng, &vocab);
            let mut captures = Vec::with_capacity(n);
            for _ in 0..n {
                captures.push((t, blocks.clone()));
                t += Duration::hours(rng.gen_range(1..3000));
                blocks = mutate(rng, &blocks, &vocab);
            }
            Page { host: hosts[p % hosts.len()].to_string(), path: format!("p{p}"), captures }
        })
        .collect()
}

pub fn html_of(blocks: &Blocks, salt: usize) -> String {
    let mut s = format!("<html><head><title>t</title></head><body><nav>menu {salt}</nav>");
    for b in blocks {
        s.push_str("<p>");
        s.push_str(&b.join(" "));
        s.push_str("</p>");
    }
    s.push_str("<script>var x = 1;</script></body></html>");
    s
}

pub fn records(pages: &[Page]) -> Vec<MementoRecord> {
    let mut out = Vec::new();
    for p in pages {
        for (i, (t, blocks)) in p.captures.iter().enumerate() {
            out.push(
                MementoRecord::new(p.uri(), None, *t, 200, "text/html".into(), html_of(blocks, i).into_bytes(), "local".into())
                    .unwrap(),
            );
        }
    }
    out
}

/// One oracle version: the captures sharing a token sequence.
#[derive(Debug, Clone)]
pub struct OracleVersion {
    pub first: DateTime<Utc>,
    pub last: DateTime<Utc>,
    pub blocks: Blocks,
}

pub fn flat(blocks: &Blocks) -> Vec<&String> {
    blocks.iter().flatten().collect()
}

pub fn oracle_versions(page: &Page) -> Vec<OracleVersion> {
    let mut caps = page.captures.clone();
    caps.sort_by_key(|c| c.0);
    let mut out: Vec<OracleVersion> = Vec::new();
    for (t, blocks) in caps {
        match out.last_mut() {
            Some(v) if flat(&v.blocks) == flat(&blocks) => v.last = t,
            _ => out.push(OracleVersion { first: t, last: t, blocks }),
        }
    }
    out
}

/// Occurrences of `phrase` as adjacent tokens inside one block.
pub fn count(blocks: &Blocks, phrase: &[String]) -> u32 {
    let mut n = 0;
    for b in blocks {
        if b.len() < phrase.len() {
            continue;
        }
        for i in 0..=b.len() - phrase.len() {
            if b[i..i + phrase.len()] == *phrase {
                n += 1;
            }
        }
    }
    n
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct HitKey {
    pub url: String,
    pub transition: usize,
    pub partial: bool,
    pub delta: u32,
    pub after: DateTime<Utc>,
    pub until: DateTime<Utc>,
}

/// Every transition where `phrase` was (fully or partially) removed or
/// added, found by recounting both versions.
pub fn brute_force(pages: &[Page], kind: ChangeType, phrase: &[String], include_partial: bool) -> BTreeSet<HitKey> {
    let deletion = matches!(kind, ChangeType::DeletedTerm | ChangeType::DeletedPhrase);
    let mut out = BTreeSet::new();
    for p in pages {
        let versions = oracle_versions(p);
        for k in 0..versions.len().saturating_sub(1) {
            let before = count(&versions[k].blocks, phrase);
            let after = count(&versions[k + 1].blocks, phrase);
            let (had, has) = if deletion { (before, after) } else { (after, before) };
            if has < had && (has == 0 || include_partial) {
                out.insert(HitKey {
                    url: p.canonical(),
                    transition: k,
                    partial: has > 0,
                    delta: had - has,
                    after: versions[k].last,
                    until: versions[k + 1].first,
                });
            }
        }
    }
    out
}

pub fn hit_keys(hits: &[chronodiff::query::SearchHit]) -> BTreeSet<HitKey> {
    hits.iter()
        .map(|h| HitKey {
            url: h.canonical_url.as_str().to_string(),
            transition: h.transition,
            partial: h.partial,
            delta: h.delta,
            after: h.change_interval.after,
            until: h.change_interval.until,
        })
        .collect()
}

/// Query phrases for a corpus: every vocabulary word, plus n-grams drawn
/// from the corpus and a few random word sequences.
pub fn phrases(rng: &mut impl Rng, pages: &[Page], vocab_size: usize, count: usize) -> Vec<Vec<String>> {
    let vocab = vocabulary(vocab_size);
    let mut out = Vec::new();
    while out.len() < count {
        let len = rng.gen_range(2..=4);
        if rng.gen_bool(0.8) {
            let p = &pages[rng.gen_range(0..pages.len())];
            let (_, blocks) = &p.captures[rng.gen_range(0..p.captures.len())];
            let b = &blocks[rng.gen_range(0..blocks.len())];
            if b.len() >= len {
                let i = rng.gen_range(0..=b.len() - len);
                out.push(b[i..i + len].to_vec());
            }
        } else {
            out.push((0..len).map(|_| vocab[rng.gen_range(0..vocab.len())].clone()).collect());
        }
    }
    out
}
