use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::TimeMapEntry;

/// Half-open datetime window `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
}

impl Window {
    pub fn contains(&self, t: DateTime<Utc>) -> bool {
        self.start <= t && t < self.end
    }
}

/// Which capture stands for a page inside a window.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum PickRule {
    #[default]
    Earliest,
    Latest,
}

fn pick(entries: &[TimeMapEntry], w: Window, rule: PickRule) -> Option<&TimeMapEntry> {
    let inside = entries.iter().filter(|e| w.contains(e.capture_datetime));
    match rule {
        // Stable on equal datetimes: first listed wins for Earliest, last for Latest.
        PickRule::Earliest => inside.fold(None, |best: Option<&TimeMapEntry>, e| match best {
            Some(b) if b.capture_datetime <= e.capture_datetime => Some(b),
            _ => Some(e),
        }),
        PickRule::Latest => inside.fold(None, |best: Option<&TimeMapEntry>, e| match best {
            Some(b) if b.capture_datetime > e.capture_datetime => Some(b),
            _ => Some(e),
        }),
    }
}

/// The representative capture in each window, or `None` if either window
/// has no capture.
pub fn find_pairs(entries: &[TimeMapEntry], a: Window, b: Window, rule: PickRule) -> Option<(&TimeMapEntry, &TimeMapEntry)> {
    Some((pick(entries, a, rule)?, pick(entries, b, rule)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum StatusBucket {
    #[serde(rename = "200")]
    Ok,
    #[serde(rename = "3xx")]
    Redirect,
    #[serde(rename = "4xx")]
    ClientError,
    #[serde(rename = "5xx")]
    ServerError,
    #[serde(rename = "missing")]
    Missing,
}

impl StatusBucket {
    pub const ALL: [StatusBucket; 5] =
        [StatusBucket::Ok, StatusBucket::Redirect, StatusBucket::ClientError, StatusBucket::ServerError, StatusBucket::Missing];

    /// Non-200 2xx and 1xx statuses have no bucket of their own and count as missing.
    pub fn of(status: Option<u16>) -> Self {
        match status {
            Some(200) => StatusBucket::Ok,
            Some(300..=399) => StatusBucket::Redirect,
            Some(400..=499) => StatusBucket::ClientError,
            Some(500..=599) => StatusBucket::ServerError,
            _ => StatusBucket::Missing,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            StatusBucket::Ok => "200",
            StatusBucket::Redirect => "3xx",
            StatusBucket::ClientError => "4xx",
            StatusBucket::ServerError => "5xx",
            StatusBucket::Missing => "missing",
        }
    }
}

impl fmt::Display for StatusBucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// One page's TimeMap and the HTTP statuses known for its captures.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PageCaptures {
    pub uri_r: String,
    pub entries: Vec<TimeMapEntry>,
    /// Status by URI-M.
    #[serde(default)]
    pub statuses: BTreeMap<String, u16>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PagePairing {
    pub uri_r: String,
    pub capture_a: Option<String>,
    pub capture_b: Option<String>,
    pub paired: bool,
    pub bucket_a: StatusBucket,
    pub bucket_b: StatusBucket,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ArchiveCoverage {
    pub archive: String,
    pub pages_a: usize,
    pub pages_b: usize,
    pub fraction_a: f64,
    pub fraction_b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PairingReport {
    pub window_a: Window,
    pub window_b: Window,
    pub total_pages: usize,
    pub paired_pages: usize,
    pub pages: Vec<PagePairing>,
    /// Pages per `(bucket in A, bucket in B)`.
    pub matrix: BTreeMap<String, usize>,
    /// Per-archive share of paired pages with at least one capture in each
    /// window. A page counts once per archive, so columns need not sum to 1.
    pub archives: Vec<ArchiveCoverage>,
}

fn matrix_key(a: StatusBucket, b: StatusBucket) -> String {
    format!("{a}/{b}")
}

impl PairingReport {
    pub fn count(&self, a: StatusBucket, b: StatusBucket) -> usize {
        self.matrix.get(&matrix_key(a, b)).copied().unwrap_or(0)
    }

    /// Share of all pages in cell `(a, b)`.
    pub fn fraction(&self, a: StatusBucket, b: StatusBucket) -> f64 {
        if self.total_pages == 0 {
            return 0.0;
        }
        self.count(a, b) as f64 / self.total_pages as f64
    }

    /// Share of all pages whose window-A (or B) capture falls in `bucket`.
    pub fn window_fraction(&self, window_b: bool, bucket: StatusBucket) -> f64 {
        if self.total_pages == 0 {
            return 0.0;
        }
        let n = self.pages.iter().filter(|p| if window_b { p.bucket_b } else { p.bucket_a } == bucket).count();
        n as f64 / self.total_pages as f64
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "pages: {}  paired: {}", self.total_pages, self.paired_pages);
        let _ = write!(out, "{:<8}", "A\\B");
        for b in StatusBucket::ALL {
            let _ = write!(out, "{:>9}", b.label());
        }
        out.push('\n');
        for a in StatusBucket::ALL {
            let _ = write!(out, "{:<8}", a.label());
            for b in StatusBucket::ALL {
                let _ = write!(out, "{:>8.1}%", 100.0 * self.fraction(a, b));
            }
            out.push('\n');
        }
        let _ = writeln!(out, "\n{:<32}{:>10}{:>10}", "archive", "A", "B");
        for c in &self.archives {
            let _ = writeln!(out, "{:<32}{:>9.1}%{:>9.1}%", c.archive, 100.0 * c.fraction_a, 100.0 * c.fraction_b);
        }
        out
    }
}

pub fn pairing_report(pages: &[PageCaptures], a: Window, b: Window, rule: PickRule) -> PairingReport {
    let mut matrix = BTreeMap::new();
    let mut rows = Vec::with_capacity(pages.len());
    let mut per_archive: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    let mut paired_pages = 0;
    for page in pages {
        let ca = pick(&page.entries, a, rule);
        let cb = pick(&page.entries, b, rule);
        let bucket = |e: Option<&TimeMapEntry>| StatusBucket::of(e.and_then(|e| page.statuses.get(&e.uri_m).copied()));
        let (bucket_a, bucket_b) = (bucket(ca), bucket(cb));
        *matrix.entry(matrix_key(bucket_a, bucket_b)).or_insert(0) += 1;
        let paired = ca.is_some() && cb.is_some();
        if paired {
            paired_pages += 1;
            let in_window = |w: Window| -> BTreeSet<&str> {
                page.entries.iter().filter(|e| w.contains(e.capture_datetime)).map(|e| e.source_archive.as_str()).collect()
            };
            for arc in in_window(a) {
                per_archive.entry(arc.to_string()).or_default().0 += 1;
            }
            for arc in in_window(b) {
                per_archive.entry(arc.to_string()).or_default().1 += 1;
            }
        }
        rows.push(PagePairing {
            uri_r: page.uri_r.clone(),
            capture_a: ca.map(|e| e.uri_m.clone()),
            capture_b: cb.map(|e| e.uri_m.clone()),
            paired,
            bucket_a,
            bucket_b,
        });
    }
    let denom = paired_pages.max(1) as f64;
    let mut archives: Vec<ArchiveCoverage> = per_archive
        .into_iter()
        .map(|(archive, (na, nb))| ArchiveCoverage {
            archive,
            pages_a: na,
            pages_b: nb,
            fraction_a: na as f64 / denom,
            fraction_b: nb as f64 / denom,
        })
        .collect();
    archives.sort_by(|x, y| (y.pages_a + y.pages_b).cmp(&(x.pages_a + x.pages_b)).then_with(|| x.archive.cmp(&y.archive)));
    PairingReport { window_a: a, window_b: b, total_pages: pages.len(), paired_pages, pages: rows, matrix, archives }
}
