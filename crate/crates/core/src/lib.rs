//! Collaboration networks from per-scientist publication lists.
//!
//! The pipeline runs ingest, duplicate detection, bipartite projection,
//! per-scientist metrics and heavy-tail fits; [`synth`] generates corpora
//! with known answers for checking all of it.

pub mod dedup;
pub mod fit;
pub mod format;
pub mod graph;
pub mod ingest;
pub mod metrics;
pub mod synth;
pub mod union_find;
#[cfg(feature = "cli")]
pub mod pipeline;
