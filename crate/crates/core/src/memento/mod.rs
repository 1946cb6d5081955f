//! TimeMaps, paired-capture analysis and change-interval refinement.

mod pairing;
mod refine;
mod timemap;

pub use pairing::{find_pairs, pairing_report, ArchiveCoverage, PageCaptures, PagePairing, PairingReport, PickRule, StatusBucket, Window};
pub use refine::{count_in_html, refine_change_interval, RefineError, Refinement, ReplayOracle, VersionOracle};
pub use timemap::{parse_timemap, TimeMapEntry, TimeMapError};
