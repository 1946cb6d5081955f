//! End-to-end build: records to documents to chains to index.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::extract::build_extracted_doc;
use crate::index::{build_index, ChangeIndex, IndexError};
use crate::ingest::{IngestError, MementoRecord};
use crate::replay::ReplayStore;
use crate::temporal::build_chains;

pub const RECORDS_FILE: &str = "records.jsonl";
pub const RESOURCES_FILE: &str = "resources.jsonl";

#[derive(Debug, Clone, Copy, Default)]
pub struct BuildOptions {
    /// Index captures of any status instead of 200 only.
    pub keep_all_statuses: bool,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct StageTiming {
    pub stage: &'static str,
    pub elapsed: Duration,
}

#[derive(Debug, Clone, Default, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BuildReport {
    pub records: usize,
    pub indexed: usize,
    pub skipped_status: usize,
    pub skipped_non_html: usize,
    pub extract_errors: usize,
    pub chains: usize,
    pub versions: usize,
    pub transitions: usize,
    pub timings: Vec<StageTiming>,
}

/// Builds an index from ingested records. Every record is kept for replay;
/// only HTML captures passing the status filter become versions.
pub fn build_from_records(
    records: Vec<MementoRecord>,
    resources: Vec<MementoRecord>,
    options: BuildOptions,
) -> Result<(ChangeIndex, BuildReport), IndexError> {
    let mut report = BuildReport { records: records.len() + resources.len(), ..Default::default() };
    let mut timings = Vec::new();

    let t = Instant::now();
    let outcomes: Vec<Option<Result<_, IngestError>>> = records
        .par_iter()
        .map(|r| {
            if !r.is_html() {
                None
            } else if !options.keep_all_statuses && r.http_status != 200 {
                Some(Err(IngestError::InvalidStatus(r.http_status)))
            } else {
                Some(build_extracted_doc(r))
            }
        })
        .collect();
    let mut docs = Vec::new();
    for o in outcomes {
        match o {
            None => report.skipped_non_html += 1,
            Some(Err(IngestError::InvalidStatus(_))) => report.skipped_status += 1,
            Some(Err(_)) => report.extract_errors += 1,
            Some(Ok(d)) => docs.push(d),
        }
    }
    report.skipped_non_html += resources.len();
    report.indexed = docs.len();
    timings.push(StageTiming { stage: "extract", elapsed: t.elapsed() });

    let t = Instant::now();
    let chains = build_chains(docs);
    report.chains = chains.len();
    report.versions = chains.iter().map(|c| c.versions.len()).sum();
    report.transitions = chains.iter().map(|c| c.transitions.len()).sum();
    timings.push(StageTiming { stage: "chains", elapsed: t.elapsed() });

    let t = Instant::now();
    let mut replay = ReplayStore::default();
    for r in records.into_iter().chain(resources) {
        if let Ok(url) = r.canonical_url() {
            replay.insert(url, r);
        }
    }
    let index = build_index(chains, replay)?;
    timings.push(StageTiming { stage: "index", elapsed: t.elapsed() });

    report.timings = timings;
    Ok((index, report))
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    /// HTML captures of any status.
    pub records: Vec<MementoRecord>,
    /// Non-HTML captures, kept for replay only.
    pub resources: Vec<MementoRecord>,
}

impl Corpus {
    pub fn push(&mut self, record: MementoRecord) {
        if record.is_html() {
            self.records.push(record);
        } else {
            self.resources.push(record);
        }
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        fs::create_dir_all(dir)?;
        for (name, list) in [(RECORDS_FILE, &self.records), (RESOURCES_FILE, &self.resources)] {
            let mut out = BufWriter::new(fs::File::create(dir.join(name))?);
            for r in list {
                serde_json::to_writer(&mut out, r)?;
                out.write_all(b"\n")?;
            }
            out.flush()?;
        }
        Ok(())
    }

    /// Reads a corpus directory. A missing resources file is treated as empty.
    pub fn read(dir: &Path) -> Result<Corpus, IngestError> {
        let read_list = |name: &str, required: bool| -> Result<Vec<MementoRecord>, IngestError> {
            let path = dir.join(name);
            if !required && !path.exists() {
                return Ok(Vec::new());
            }
            let mut out = Vec::new();
            for (i, line) in BufReader::new(fs::File::open(&path)?).lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let r: MementoRecord = serde_json::from_str(&line)
                    .map_err(|e| IngestError::MalformedWarc(format!("{name} line {}: {e}", i + 1)))?;
                out.push(r);
            }
            Ok(out)
        };
        Ok(Corpus { records: read_list(RECORDS_FILE, true)?, resources: read_list(RESOURCES_FILE, false)? })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::Field;
    use chrono::{TimeZone, Utc};

    fn rec(url: &str, month: u32, status: u16, ct: &str, body: &str) -> MementoRecord {
        MementoRecord::new(
            url.into(),
            None,
            Utc.with_ymd_and_hms(2017, month, 1, 0, 0, 0).unwrap(),
            status,
            ct.into(),
            body.as_bytes().to_vec(),
            "local".into(),
        )
        .unwrap()
    }

    #[test]
    fn status_filter_and_replay() {
        let records = vec![
            rec("http://example.org/", 1, 200, "text/html", "<p>alpha beta</p>"),
            rec("http://example.org/", 2, 404, "text/html", "<p>not found</p>"),
            rec("http://example.org/", 3, 200, "text/html", "<p>alpha</p>"),
        ];
        let resources = vec![rec("http://example.org/a.png", 1, 200, "image/png", "png")];
        let (idx, report) = build_from_records(records.clone(), resources.clone(), BuildOptions::default()).unwrap();
        assert_eq!((report.indexed, report.skipped_status, report.skipped_non_html), (2, 1, 1));
        assert_eq!(report.transitions, 1);
        assert_eq!(idx.lookup(Field::Deleted, "beta").len(), 1);
        assert!(idx.lookup(Field::Text, "found").is_empty());
        assert_eq!(idx.replay().len(), 4);

        let (all, _) = build_from_records(records, resources, BuildOptions { keep_all_statuses: true }).unwrap();
        assert_eq!(all.lookup(Field::Text, "found").len(), 1);
    }

    #[test]
    fn corpus_round_trip() {
        let mut corpus = Corpus::default();
        corpus.push(rec("http://example.org/", 1, 200, "text/html", "<p>x</p>"));
        corpus.push(rec("http://example.org/s.css", 1, 200, "text/css", "p{}"));
        let dir = tempfile::tempdir().unwrap();
        corpus.write(dir.path()).unwrap();
        assert_eq!(Corpus::read(dir.path()).unwrap(), corpus);
    }
}
