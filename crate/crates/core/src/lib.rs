//! Change-text search over archived versions of web pages.
//!
//! The pipeline runs in three stages. [`ingest`] reads WARC files into
//! memento records; [`extract`] turns HTML into token streams;
//! [`temporal`] coalesces captures into version chains and computes the
//! terms added and removed at every transition; [`index`] stores those
//! change sets as an inverted index that [`query`] searches. [`diff`],
//! [`memento`] and [`analytics`] provide the inspection tools built on top.

pub mod ingest;
pub mod extract;
pub mod temporal;
pub mod diff;
pub mod replay;
pub mod index;
pub mod pipeline;
pub mod query;
pub mod memento;
pub mod analytics;
pub mod fixtures;
