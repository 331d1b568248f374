//! Actionness distribution modeling for point-supervised temporal action
//! localization.
//!
//! The crate turns per-snippet class/background probability signals and
//! single-point annotations into pseudo-label intervals by fitting
//! peak-matched Gaussian and uniform templates, and carries the surrounding
//! numeric machinery: signal conditioning, a bounded scalar minimizer, the
//! training losses with analytic gradients, proposal decoding, mAP
//! evaluation and a seeded synthetic-video generator.
//!
//! Everything here is `no_std` + `alloc`. File formats and the command-line
//! front end live in the `adm-cli` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

mod error;
mod math;

pub mod adm;
pub mod decoder;
pub mod eval;
pub mod losses;
pub mod optim;
pub mod signal;
pub mod synth;

pub use error::{Error, Result};
pub use signal::{
    AugmentedLabelSet, BackgroundPoints, ClassId, Interval, PointAnnotation, ProbabilitySignal,
};
