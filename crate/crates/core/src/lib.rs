//! Tick-data microstructure measures and minimax-linkage prototype
//! clustering.
//!
//! The flow is ingest, classify, per-interval measure panels, per-symbol
//! correlation distances, averaging, and prototype selection from a minimax
//! linkage tree. [`pipeline::run_pipeline`] drives it end to end and
//! [`synth`] produces deterministic synthetic trading days for testing.

pub mod classify;
pub mod cluster;
pub mod error;
pub mod ingest;
pub mod measures;
pub mod panel;
pub mod pipeline;
pub mod registry;
pub mod render;
pub mod step;
pub mod synth;

pub use error::{Error, Result};
