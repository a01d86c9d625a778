//! Degraded-reference image quality assessment.
//!
//! A degraded-reference (DR) setting sits between full-reference and
//! no-reference IQA: an image is distorted in two stages, and the quality of
//! the final image relative to the original must be predicted from what is
//! measurable at the midpoint. This crate provides the pieces end to end:
//!
//! * grayscale image buffers and the shared convolution kernels ([`image`]),
//! * two-stage synthetic distortion pipelines with fixed parameter ladders
//!   ([`distort`]),
//! * full-reference metrics (SSIM, MS-SSIM) and the score triples that drive
//!   everything downstream ([`fr`]),
//! * a self-trained natural-scene-statistics no-reference metric ([`nr`]),
//! * the architecture-code taxonomy of DR scenarios ([`arch`]),
//! * prediction models fusing midpoint scores into final-quality estimates,
//!   from closed-form fusion to kernel regression ([`fusion`], [`logistic`],
//!   [`svr`], [`baseline`]),
//! * correlation/benchmark machinery and distortion-behavior analysis
//!   ([`eval`]),
//! * a deterministic procedural corpus for training and fixtures ([`corpus`]).
//!
//! The crate is `no_std` (with `alloc`): everything here is pure computation
//! over in-memory buffers. File formats, dataset construction on disk, and
//! the command-line tools live in the companion crate `driqa-tools`.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod arch;
pub mod baseline;
pub mod corpus;
pub mod distort;
pub mod eval;
pub mod fr;
pub mod fusion;
pub mod image;
pub mod linalg;
pub mod logistic;
pub mod math;
pub mod nr;
pub mod svr;

use alloc::string::String;
use core::fmt;

/// Errors raised by the computational core.
///
/// IO and file-format failures cannot arise here; they belong to the std
/// companion crate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// An argument is outside the documented domain of an operation.
    Domain(String),
    /// The input data cannot determine a fit (empty groups, rank-deficient
    /// systems, constant columns).
    Degenerate(String),
    /// An iterative solver hit its iteration cap before reaching tolerance.
    Convergence(String),
    /// A declared backend has no implementation in this build.
    Unsupported(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::Degenerate(msg) => write!(f, "degenerate input: {msg}"),
            Error::Convergence(msg) => write!(f, "convergence failure: {msg}"),
            Error::Unsupported(msg) => write!(f, "unsupported: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

/// Result alias for core operations.
pub type Result<T> = core::result::Result<T, Error>;

pub use crate::image::{ImagePlane, RgbImage};
