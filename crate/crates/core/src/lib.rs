//! Generic-case complexity workbench for one-way-function candidates.
//!
//! The crate measures how often an inversion algorithm succeeds on each
//! individual input of a candidate function, turns those per-input
//! measurements into densities over the spheres `I_n = {0,1}^n`, and
//! provides the constructive reductions relating per-input and averaged
//! notions of hardness (repetition amplification, averaging split,
//! step-budget clipping, achievement ratios).
//!
//! Module map:
//!
//! - [`bits`]: binary strings and coin tapes.
//! - [`strata`]: spheres, input sets, exact and sampled densities, profiles,
//!   convergence classification.
//! - [`harness`]: candidate functions, metered inverter programs, per-input
//!   success probabilities.
//! - [`reductions`]: amplifier, clip, achievement ratio, averaging split,
//!   aggregate success, definition checks.
//! - [`candidates`]: the registry of desk-scale functions and inverters.
//! - [`report`] and [`cli`]: experiment configs, JSON/CSV documents and the
//!   command-line runner.

pub mod bits;
pub mod candidates;
pub mod cli;
pub mod error;
pub mod harness;
pub mod meter;
pub mod reductions;
pub mod report;
pub mod seed;
pub mod stats;
pub mod strata;

pub use bits::{BitString, CoinTape};
pub use error::{Error, Result};
pub use harness::{CandidateFunction, DeltaEstimate, InverterKind, InverterProgram, RunOutcome, RunStatus};
pub use strata::{ConvergenceClass, ConvergenceReport, DensityProfile, DensityValue, InputSetSpec};

/// Version string recorded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
