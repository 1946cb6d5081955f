//! HTTP API, bannerless replay and the operator command line.

pub mod api;
pub mod cli;
pub mod params;

pub use api::{router, ApiConfig, AppState, Snapshot};
