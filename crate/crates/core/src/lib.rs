//! Transmit waveform design for colocated MIMO radar.
//!
//! The crate jointly minimizes the spatial ISLR (beampattern energy leaking
//! into undesired directions) and the range ISLR (auto- and cross-correlation
//! sidelobes) of an `Mt x N` waveform matrix. The scalarized objective
//! `eta * spatial + (1 - eta) * range` is minimized by cyclic coordinate
//! descent: each entry is updated in turn by the exact minimizer of a
//! one-variable fractional objective whose coefficients are extracted in
//! closed form. Four feasible sets are supported: an energy budget, an energy
//! budget with a PAR bound, constant modulus, and MPSK phases.
//!
//! Module map:
//! - [`model`]: waveform, angle scenario, constraint and run configuration types
//! - [`metrics`]: direct beampattern, correlation and ISLR evaluation
//! - [`coeffs`]: per-entry coefficient extraction
//! - [`rootfind`]: real-polynomial root finding
//! - [`solvers`]: single-entry minimizers for each constraint
//! - [`engine`]: the coordinate-descent driver and Pareto sweeps
//! - [`cli`]: config parsing and CSV/JSON export for the command-line tool

pub mod cli;
pub mod coeffs;
pub mod engine;
pub mod error;
pub mod metrics;
pub mod model;
pub mod rootfind;
pub mod solvers;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
pub use metrics::IslrReport;
pub use model::{AngleRegion, AngleScenario, ConstraintSpec, RunConfig, WaveformSet};
