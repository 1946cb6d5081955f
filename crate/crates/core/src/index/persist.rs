//! On-disk layout.
//!
//! A persisted index is a directory with six files:
//!
//! * `manifest.json`: format tag, counts and a SHA-256 digest per file.
//! * `dict.bin`: the term table. Each entry is the term, then for every
//!   field it has postings in: field id, byte offset, posting count and
//!   byte length into `postings.bin`.
//! * `postings.bin`: varint lists of `(chain delta, ordinal delta, payload)`.
//! * `chains.jsonl`, `docs.jsonl`: version metadata and block texts.
//! * `bodies.jsonl`: stored capture bodies for replay.
//!
//! Transitions and token statistics are recomputed on load.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::varint::{get_i64, get_u64, put_i64, put_u64};
use super::{ChangeIndex, Field, FieldLists, IndexError, Posting};
use crate::extract::ExtractedDoc;
use crate::ingest::{CanonicalUrl, MementoMeta};
use crate::replay::{ReplayStore, StoredCapture};
use crate::temporal::{assemble_chain, CoalescedVersion, Validity, VersionChain};

pub const FORMAT_VERSION: &str = "chronodiff-index/1";
const FORMAT_FAMILY: &str = "chronodiff-index/";
const DICT_MAGIC: &[u8; 8] = b"CDDICT1\n";

const MANIFEST: &str = "manifest.json";
const DICT: &str = "dict.bin";
const POSTINGS: &str = "postings.bin";
const CHAINS: &str = "chains.jsonl";
const DOCS: &str = "docs.jsonl";
const BODIES: &str = "bodies.jsonl";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ManifestCounts {
    pub chains: usize,
    pub versions: usize,
    pub transitions: usize,
    pub terms: usize,
    pub postings: usize,
    pub captures: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FileDigest {
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Manifest {
    pub format: String,
    pub built_at: DateTime<Utc>,
    pub counts: ManifestCounts,
    #[serde(default)]
    pub files: BTreeMap<String, FileDigest>,
}

impl Manifest {
    pub(super) fn for_contents(dict: &BTreeMap<String, FieldLists>, chains: &[VersionChain], replay: &ReplayStore) -> Self {
        Manifest {
            format: FORMAT_VERSION.to_string(),
            built_at: Utc::now(),
            counts: ManifestCounts {
                chains: chains.len(),
                versions: chains.iter().map(|c| c.versions.len()).sum(),
                transitions: chains.iter().map(|c| c.transitions.len()).sum(),
                terms: dict.len(),
                postings: dict.values().flat_map(|f| f.values()).map(Vec::len).sum(),
                captures: replay.len(),
            },
            files: BTreeMap::new(),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct ChainLine {
    canonical_url: CanonicalUrl,
    versions: Vec<VersionLine>,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct VersionLine {
    validity: Validity,
    members: Vec<MementoMeta>,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct DocLine {
    chain: u32,
    version: u32,
    blocks: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct BodyLine {
    url: CanonicalUrl,
    #[serde(flatten)]
    capture: StoredCapture,
}

fn corrupt(msg: impl Into<String>) -> IndexError {
    IndexError::CorruptIndex(msg.into())
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn json_lines<T: Serialize>(items: impl Iterator<Item = T>) -> Vec<u8> {
    let mut out = Vec::new();
    for item in items {
        serde_json::to_writer(&mut out, &item).expect("serializable");
        out.push(b'\n');
    }
    out
}

fn parse_lines<T: for<'de> Deserialize<'de>>(name: &str, bytes: &[u8]) -> Result<Vec<T>, IndexError> {
    bytes
        .split(|b| *b == b'\n')
        .filter(|l| !l.is_empty())
        .enumerate()
        .map(|(i, l)| serde_json::from_slice(l).map_err(|e| corrupt(format!("{name} line {}: {e}", i + 1))))
        .collect()
}

fn encode_postings(list: &[Posting], out: &mut Vec<u8>) {
    let mut prev: Option<Posting> = None;
    for p in list {
        match prev {
            Some(q) if q.chain_id == p.chain_id => {
                put_u64(out, 0);
                put_u64(out, u64::from(p.ordinal - q.ordinal));
            }
            Some(q) => {
                put_u64(out, u64::from(p.chain_id - q.chain_id));
                put_u64(out, u64::from(p.ordinal));
            }
            None => {
                put_u64(out, u64::from(p.chain_id));
                put_u64(out, u64::from(p.ordinal));
            }
        }
        put_i64(out, p.payload);
        prev = Some(*p);
    }
}

fn decode_postings(buf: &[u8], count: usize) -> Option<Vec<Posting>> {
    let mut pos = 0;
    let mut out: Vec<Posting> = Vec::with_capacity(count.min(buf.len()));
    for _ in 0..count {
        let chain_delta = u32::try_from(get_u64(buf, &mut pos)?).ok()?;
        let ord = u32::try_from(get_u64(buf, &mut pos)?).ok()?;
        let payload = get_i64(buf, &mut pos)?;
        let (chain_id, ordinal) = match out.last() {
            Some(q) if chain_delta == 0 => (q.chain_id, q.ordinal.checked_add(ord)?),
            Some(q) => (q.chain_id.checked_add(chain_delta)?, ord),
            None => (chain_delta, ord),
        };
        out.push(Posting { chain_id, ordinal, payload });
    }
    (pos == buf.len()).then_some(out)
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    put_u64(out, s.len() as u64);
    out.extend_from_slice(s.as_bytes());
}

impl ChangeIndex {
    /// Writes the index into `dir`, creating it if needed. The manifest is
    /// written last.
    pub fn persist(&self, dir: &Path) -> Result<Manifest, IndexError> {
        fs::create_dir_all(dir)?;

        let mut dict = Vec::from(&DICT_MAGIC[..]);
        let mut postings = Vec::new();
        put_u64(&mut dict, self.dict.len() as u64);
        for (term, lists) in &self.dict {
            put_str(&mut dict, term);
            put_u64(&mut dict, lists.len() as u64);
            for (field, list) in lists {
                let start = postings.len();
                encode_postings(list, &mut postings);
                dict.push(field.id());
                put_u64(&mut dict, start as u64);
                put_u64(&mut dict, list.len() as u64);
                put_u64(&mut dict, (postings.len() - start) as u64);
            }
        }

        let chains = json_lines(self.chains.iter().map(|c| ChainLine {
            canonical_url: c.canonical_url.clone(),
            versions: c
                .versions
                .iter()
                .map(|v| VersionLine { validity: v.validity, members: v.members.clone() })
                .collect(),
        }));
        let docs = json_lines(self.chains.iter().enumerate().flat_map(|(cid, c)| {
            c.versions.iter().map(move |v| DocLine {
                chain: cid as u32,
                version: v.version_index as u32,
                blocks: v.doc.blocks.iter().map(|b| b.text.clone()).collect(),
            })
        }));
        let bodies = json_lines(self.replay.iter().map(|(u, c)| BodyLine { url: u.clone(), capture: c.clone() }));

        let mut manifest = self.manifest.clone();
        manifest.files.clear();
        for (name, bytes) in [(DICT, &dict), (POSTINGS, &postings), (CHAINS, &chains), (DOCS, &docs), (BODIES, &bodies)] {
            fs::write(dir.join(name), bytes)?;
            manifest
                .files
                .insert(name.to_string(), FileDigest { bytes: bytes.len() as u64, sha256: sha256_hex(bytes) });
        }
        let mut f = fs::File::create(dir.join(MANIFEST))?;
        serde_json::to_writer_pretty(&mut f, &manifest).map_err(std::io::Error::from)?;
        f.write_all(b"\n")?;
        f.sync_all()?;
        Ok(manifest)
    }

    /// Loads an index written by [`ChangeIndex::persist`], verifying every
    /// file against the manifest digests.
    pub fn load(dir: &Path) -> Result<ChangeIndex, IndexError> {
        let raw = fs::read(dir.join(MANIFEST))?;
        let value: serde_json::Value = serde_json::from_slice(&raw).map_err(|e| corrupt(format!("manifest: {e}")))?;
        match value.get("format").and_then(|f| f.as_str()) {
            Some(FORMAT_VERSION) => {}
            Some(other) if other.starts_with(FORMAT_FAMILY) => {
                return Err(IndexError::VersionMismatch { found: other.to_string(), expected: FORMAT_VERSION.to_string() })
            }
            _ => return Err(corrupt("manifest has no recognised format tag")),
        }
        let manifest: Manifest = serde_json::from_value(value).map_err(|e| corrupt(format!("manifest: {e}")))?;

        let read = |name: &str| -> Result<Vec<u8>, IndexError> {
            let digest = manifest.files.get(name).ok_or_else(|| corrupt(format!("manifest lists no {name}")))?;
            let bytes = fs::read(dir.join(name))?;
            if bytes.len() as u64 != digest.bytes || sha256_hex(&bytes) != digest.sha256 {
                return Err(corrupt(format!("{name} does not match its checksum")));
            }
            Ok(bytes)
        };
        let dict_bytes = read(DICT)?;
        let postings = read(POSTINGS)?;
        let chain_lines: Vec<ChainLine> = parse_lines(CHAINS, &read(CHAINS)?)?;
        let doc_lines: Vec<DocLine> = parse_lines(DOCS, &read(DOCS)?)?;
        let body_lines: Vec<BodyLine> = parse_lines(BODIES, &read(BODIES)?)?;

        let mut blocks: BTreeMap<(u32, u32), Vec<String>> =
            doc_lines.into_iter().map(|d| ((d.chain, d.version), d.blocks)).collect();
        let mut chains = Vec::with_capacity(chain_lines.len());
        for (cid, line) in chain_lines.into_iter().enumerate() {
            let mut versions = Vec::with_capacity(line.versions.len());
            for (vi, v) in line.versions.into_iter().enumerate() {
                let first = v.members.first().ok_or_else(|| corrupt("version without captures"))?.clone();
                let texts = blocks
                    .remove(&(cid as u32, vi as u32))
                    .ok_or_else(|| corrupt(format!("missing text for chain {cid} version {vi}")))?;
                versions.push(CoalescedVersion {
                    version_index: vi,
                    validity: v.validity,
                    members: v.members,
                    doc: ExtractedDoc::from_blocks(line.canonical_url.clone(), first, texts),
                });
            }
            if versions.is_empty() {
                return Err(corrupt(format!("chain {cid} has no versions")));
            }
            chains.push(assemble_chain(line.canonical_url, versions));
        }
        if !blocks.is_empty() {
            return Err(corrupt("text for unknown versions"));
        }

        let dict = decode_dict(&dict_bytes, &postings, &chains)?;

        let mut replay = ReplayStore::default();
        for b in body_lines {
            replay.insert_capture(b.url, b.capture);
        }

        let mut by_url = BTreeMap::new();
        for (id, c) in chains.iter().enumerate() {
            if by_url.insert(c.canonical_url.clone(), id as u32).is_some() {
                return Err(corrupt(format!("duplicate chain {}", c.canonical_url.as_str())));
            }
        }
        let index = ChangeIndex { dict, chains, by_url, replay, manifest };
        let c = &index.manifest.counts;
        if c.chains != index.chains.len() || c.terms != index.dict.len() || c.captures != index.replay.len() {
            return Err(corrupt("manifest counts disagree with contents"));
        }
        Ok(index)
    }
}

fn decode_dict(buf: &[u8], postings: &[u8], chains: &[VersionChain]) -> Result<BTreeMap<String, FieldLists>, IndexError> {
    let bad = || corrupt("malformed dictionary");
    if !buf.starts_with(DICT_MAGIC) {
        return Err(bad());
    }
    let mut pos = DICT_MAGIC.len();
    let next = |pos: &mut usize| get_u64(buf, pos).and_then(|v| usize::try_from(v).ok()).ok_or_else(bad);
    let n_terms = next(&mut pos)?;
    let mut dict = BTreeMap::new();
    let mut prev_term: Option<String> = None;
    for _ in 0..n_terms {
        let len = next(&mut pos)?;
        let bytes = buf.get(pos..pos.checked_add(len).ok_or_else(bad)?).ok_or_else(bad)?;
        pos += len;
        let term = String::from_utf8(bytes.to_vec()).map_err(|_| bad())?;
        if prev_term.as_ref().is_some_and(|p| *p >= term) {
            return Err(corrupt("dictionary terms out of order"));
        }
        let n_fields = next(&mut pos)?;
        let mut lists = FieldLists::new();
        for _ in 0..n_fields {
            let field = buf.get(pos).copied().and_then(Field::from_id).ok_or_else(bad)?;
            pos += 1;
            let offset = next(&mut pos)?;
            let count = next(&mut pos)?;
            let len = next(&mut pos)?;
            let slice = postings.get(offset..offset.checked_add(len).ok_or_else(bad)?).ok_or_else(bad)?;
            let list = decode_postings(slice, count).ok_or_else(|| corrupt(format!("postings for {term:?} in {field}")))?;
            for p in &list {
                let chain = chains.get(p.chain_id as usize).ok_or_else(|| corrupt("posting for unknown chain"))?;
                let limit = if field.is_change() { chain.transitions.len() } else { chain.versions.len() };
                if p.ordinal as usize >= limit {
                    return Err(corrupt("posting ordinal out of range"));
                }
            }
            if lists.insert(field, list).is_some() {
                return Err(corrupt("field repeated in dictionary entry"));
            }
        }
        prev_term = Some(term.clone());
        dict.insert(term, lists);
    }
    if pos != buf.len() {
        return Err(corrupt("trailing bytes in dictionary"));
    }
    Ok(dict)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::build_index;
    use crate::ingest::{canonicalize_url, MementoRecord};
    use crate::temporal::build_chain;
    use chrono::{Duration, TimeZone};

    fn sample() -> ChangeIndex {
        let base = Utc.with_ymd_and_hms(2016, 7, 1, 0, 0, 0).unwrap();
        let mut replay = ReplayStore::default();
        let mut chains = Vec::new();
        for (u, texts) in [("example.org/a", vec!["air pollution|levels", "air levels", "air levels"]), ("example.org/b", vec!["x y", "y x z"])] {
            let url = canonicalize_url(u).unwrap();
            let docs = texts
                .iter()
                .enumerate()
                .map(|(i, t)| {
                    let rec = MementoRecord::new(
                        format!("http://{u}"),
                        None,
                        base + Duration::days(i as i64 * 40),
                        200,
                        "text/html".to_string(),
                        format!("<p>{t}</p>").into_bytes(),
                        "local".to_string(),
                    )
                    .unwrap();
                    let meta = rec.meta.clone();
                    replay.insert(url.clone(), rec);
                    ExtractedDoc::from_blocks(url.clone(), meta, t.split('|').map(str::to_string).collect())
                })
                .collect();
            chains.push(build_chain(docs).unwrap());
        }
        build_index(chains, replay).unwrap()
    }

    fn same_lookups(a: &ChangeIndex, b: &ChangeIndex) {
        assert_eq!(a.terms().collect::<Vec<_>>(), b.terms().collect::<Vec<_>>());
        for t in a.terms() {
            for f in Field::ALL {
                assert_eq!(a.lookup(f, t), b.lookup(f, t), "{f} {t}");
            }
        }
    }

    #[test]
    fn round_trip() {
        let idx = sample();
        let dir = tempfile::tempdir().unwrap();
        let manifest = idx.persist(dir.path()).unwrap();
        assert_eq!(manifest.files.len(), 5);
        let back = ChangeIndex::load(dir.path()).unwrap();
        same_lookups(&idx, &back);
        assert_eq!(back.chains().len(), 2);
        assert_eq!(back.chains()[0].versions.len(), 2);
        assert_eq!(back.chains()[0].transitions, idx.chains()[0].transitions);
        assert_eq!(back.replay().len(), 5);
        assert_eq!(back.manifest().counts, idx.manifest().counts);
    }

    #[test]
    fn flipped_posting_byte_is_corrupt() {
        let dir = tempfile::tempdir().unwrap();
        sample().persist(dir.path()).unwrap();
        let p = dir.path().join(POSTINGS);
        let mut bytes = fs::read(&p).unwrap();
        bytes[3] ^= 0x01;
        fs::write(&p, bytes).unwrap();
        assert!(matches!(ChangeIndex::load(dir.path()), Err(IndexError::CorruptIndex(_))));
    }

    #[test]
    fn truncated_postings_are_corrupt() {
        let dir = tempfile::tempdir().unwrap();
        sample().persist(dir.path()).unwrap();
        let p = dir.path().join(POSTINGS);
        let bytes = fs::read(&p).unwrap();
        fs::write(&p, &bytes[..bytes.len() - 2]).unwrap();
        assert!(matches!(ChangeIndex::load(dir.path()), Err(IndexError::CorruptIndex(_))));
    }

    #[test]
    fn postings_with_bad_structure_but_valid_checksum_are_corrupt() {
        let dir = tempfile::tempdir().unwrap();
        sample().persist(dir.path()).unwrap();
        let p = dir.path().join(POSTINGS);
        let mut bytes = fs::read(&p).unwrap();
        bytes.truncate(bytes.len() - 1);
        fs::write(&p, &bytes).unwrap();
        let mpath = dir.path().join(MANIFEST);
        let mut m: Manifest = serde_json::from_slice(&fs::read(&mpath).unwrap()).unwrap();
        m.files.insert(POSTINGS.into(), FileDigest { bytes: bytes.len() as u64, sha256: sha256_hex(&bytes) });
        fs::write(&mpath, serde_json::to_vec(&m).unwrap()).unwrap();
        assert!(matches!(ChangeIndex::load(dir.path()), Err(IndexError::CorruptIndex(_))));
    }

    #[test]
    fn future_format_is_version_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        sample().persist(dir.path()).unwrap();
        let mpath = dir.path().join(MANIFEST);
        let text = fs::read_to_string(&mpath).unwrap().replace(FORMAT_VERSION, "chronodiff-index/2");
        fs::write(&mpath, text).unwrap();
        match ChangeIndex::load(dir.path()) {
            Err(IndexError::VersionMismatch { found, .. }) => assert_eq!(found, "chronodiff-index/2"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn garbage_manifest_is_corrupt() {
        let dir = tempfile::tempdir().unwrap();
        sample().persist(dir.path()).unwrap();
        fs::write(dir.path().join(MANIFEST), b"{not json").unwrap();
        assert!(matches!(ChangeIndex::load(dir.path()), Err(IndexError::CorruptIndex(_))));
    }

    #[test]
    fn postings_codec() {
        let list = vec![
            Posting { chain_id: 0, ordinal: 3, payload: -2 },
            Posting { chain_id: 0, ordinal: 9, payload: 1 },
            Posting { chain_id: 7, ordinal: 0, payload: 5 },
            Posting { chain_id: 300, ordinal: 2, payload: i64::MIN },
        ];
        let mut buf = Vec::new();
        encode_postings(&list, &mut buf);
        assert_eq!(decode_postings(&buf, list.len()), Some(list.clone()));
        assert_eq!(decode_postings(&buf, list.len() + 1), None);
        assert_eq!(decode_postings(&buf, list.len() - 1), None);
    }
}
