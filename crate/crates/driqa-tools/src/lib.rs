//! File formats, dataset builder, and command-line driver for
//! degraded-reference image quality assessment.
//!
//! This crate is the standard-library companion to `driqa-core`: the core
//! crate holds all numeric algorithms (distortion simulation, quality
//! measures, fusion models) with no I/O, while this crate adds everything
//! that touches the filesystem — image codecs, the database manifest and
//! parameter-file formats, the parallel dataset builder, report writers,
//! provenance records, and the `driqa` binary.
//!
//! The major pieces:
//!
//! - [`io`]: 8-bit PNG/PGM/PPM loading and saving with a fixed
//!   float-to-byte quantization rule.
//! - [`manifest`]: the tab-separated database manifest tying every
//!   degraded and final image to its pristine source, distortion
//!   parameters, seed, and benchmark label.
//! - [`dataset`]: deterministic two-stage database construction and
//!   scoring, parallelized per source image.
//! - [`params`]: round-trip-exact serialization of fitted model
//!   parameters, no-reference score mappings, and the
//!   natural-scene-statistics model.
//! - [`report`]: CSV tables and SVG plots for evaluation results and
//!   distortion-behavior curves.
//! - [`provenance`]: input-hash records written beside every generated
//!   artifact.
//! - [`cli`]: the subcommand driver behind the `driqa` binary.
//!
//! All float serialization uses 17 significant digits, so every written
//! value reparses to the identical bit pattern and regenerated artifacts
//! are byte-for-byte reproducible.

pub mod cli;
pub mod dataset;
pub mod error;
pub mod io;
pub mod manifest;
pub mod params;
pub mod provenance;
pub mod report;

pub use error::{Result, ToolError};
