//! One-shot appearance-model segmentation of a single nematode across
//! heterogeneous backgrounds, followed by distance-field skeleton tracing and
//! undulatory motility metrics.
//!
//! The pipeline has two stages. A worm mixture and a grid of per-cell background
//! mixtures are learned from one annotated frame ([`appearance`]); every frame is
//! then segmented by a likelihood-ratio test, its centerline traced
//! ([`skeleton`]) and the centerlines summarized ([`motility`]).
//! [`evaluation`] scores masks against ground truth and provides the threshold
//! baseline, and [`synthgen`] renders sequences with exact ground truth.

pub mod appearance;
pub mod config;
pub mod csv;
mod error;
mod seed;
pub mod evaluation;
pub mod imagecore;
pub mod mixture;
pub mod motility;
pub mod skeleton;
pub mod synthgen;

pub use error::{Error, Result};
