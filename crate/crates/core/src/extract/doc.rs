use std::collections::HashMap;
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{extract_text, tokenize};
use crate::ingest::{CanonicalUrl, IngestError, MementoMeta, MementoRecord};

/// 64-bit digest of a token sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ContentHash(pub u64);

impl ContentHash {
    pub fn of_tokens<S: AsRef<str>>(tokens: &[S]) -> Self {
        let mut hasher = Sha256::new();
        for t in tokens {
            hasher.update(t.as_ref().as_bytes());
            // 0xff never occurs in UTF-8
            hasher.update([0xff]);
        }
        let digest = hasher.finalize();
        ContentHash(u64::from_le_bytes(digest[..8].try_into().expect("8 bytes")))
    }
}

impl fmt::Display for ContentHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextBlock {
    pub index: usize,
    pub text: String,
}

/// Tokenized content of one capture with its term statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractedDoc {
    pub canonical_url: CanonicalUrl,
    pub source: MementoMeta,
    pub blocks: Vec<TextBlock>,
    pub tokens: Vec<String>,
    /// Block number of every token.
    pub token_blocks: Vec<u32>,
    pub unigram_counts: HashMap<String, u32>,
    pub bigram_counts: HashMap<(String, String), u32>,
    pub positions: HashMap<String, Vec<u32>>,
    pub content_hash: ContentHash,
}

impl ExtractedDoc {
    pub fn from_blocks(canonical_url: CanonicalUrl, source: MementoMeta, blocks: Vec<String>) -> Self {
        let blocks: Vec<TextBlock> = blocks
            .into_iter()
            .enumerate()
            .map(|(index, text)| TextBlock { index, text })
            .collect();
        let mut tokens = Vec::new();
        let mut token_blocks = Vec::new();
        let mut bigram_counts: HashMap<(String, String), u32> = HashMap::new();
        for block in &blocks {
            let block_tokens = tokenize(&block.text);
            for pair in block_tokens.windows(2) {
                *bigram_counts.entry((pair[0].clone(), pair[1].clone())).or_default() += 1;
            }
            token_blocks.extend(std::iter::repeat_n(block.index as u32, block_tokens.len()));
            tokens.extend(block_tokens);
        }
        let mut unigram_counts: HashMap<String, u32> = HashMap::new();
        let mut positions: HashMap<String, Vec<u32>> = HashMap::new();
        for (i, t) in tokens.iter().enumerate() {
            *unigram_counts.entry(t.clone()).or_default() += 1;
            positions.entry(t.clone()).or_default().push(i as u32);
        }
        let content_hash = ContentHash::of_tokens(&tokens);
        Self { canonical_url, source, blocks, tokens, token_blocks, unigram_counts, bigram_counts, positions, content_hash }
    }

    pub fn capture_datetime(&self) -> DateTime<Utc> {
        self.source.capture_datetime
    }

    pub fn count(&self, term: &str) -> u32 {
        self.unigram_counts.get(term).copied().unwrap_or(0)
    }

    pub fn bigram_count(&self, first: &str, second: &str) -> u32 {
        // HashMap<(String, String), _> cannot be probed with borrowed pairs
        self.positions
            .get(first)
            .map(|ps| {
                ps.iter()
                    .filter(|&&p| self.phrase_at(p as usize, &[first, second]))
                    .count() as u32
            })
            .unwrap_or(0)
    }

    /// Occurrences of `phrase` as adjacent tokens within one block.
    pub fn phrase_count<S: AsRef<str>>(&self, phrase: &[S]) -> u32 {
        match phrase {
            [] => 0,
            [one] => self.count(one.as_ref()),
            [first, ..] => self
                .positions
                .get(first.as_ref())
                .map(|ps| ps.iter().filter(|&&p| self.phrase_at(p as usize, phrase)).count() as u32)
                .unwrap_or(0),
        }
    }

    fn phrase_at<S: AsRef<str>>(&self, start: usize, phrase: &[S]) -> bool {
        let end = start + phrase.len();
        end <= self.tokens.len()
            && self.token_blocks[start] == self.token_blocks[end - 1]
            && self.tokens[start..end].iter().zip(phrase).all(|(t, p)| t == p.as_ref())
    }

    /// Token ranges of each block, in order.
    pub fn block_token_ranges(&self) -> Vec<std::ops::Range<usize>> {
        let mut out: Vec<std::ops::Range<usize>> = Vec::new();
        for (i, b) in self.token_blocks.iter().enumerate() {
            match out.last_mut() {
                Some(r) if self.token_blocks[r.start] == *b => r.end = i + 1,
                _ => out.push(i..i + 1),
            }
        }
        out
    }
}

/// Extracts, tokenizes and counts one HTML capture.
pub fn build_extracted_doc(record: &MementoRecord) -> Result<ExtractedDoc, IngestError> {
    let canonical_url = record.canonical_url()?;
    Ok(ExtractedDoc::from_blocks(canonical_url, record.meta.clone(), extract_text(&record.body)))
}
