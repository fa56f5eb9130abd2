//! Building blocks for page-level web annotation: text extraction from
//! scraped HTML, URL decomposition and keyword highlighting, per-annotator
//! annotation storage with CSV export, deterministic task ordering, and
//! Wayback Machine snapshot lookup.

pub mod archive;
pub mod config;
pub mod extraction;
pub mod session;
pub mod store;
pub mod url_analysis;
