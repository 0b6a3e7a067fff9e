//! Desk-scale simulation of a quantum random number generator that harvests
//! laser phase noise through a delayed self-heterodyne interferometer.
//!
//! The chain mirrors the physical instrument: a semiconductor laser whose
//! phase diffuses under spontaneous emission ([`laser`]), an imbalanced
//! Mach-Zehnder interferometer converting phase diffusion into intensity
//! fluctuations ([`interferometer`]), band-limited noisy photodetection and
//! digitization ([`detection`]), threshold binarization with XOR
//! post-processing ([`extraction`]), and a validation layer of statistical
//! tests ([`analysis`]). [`pipeline`] runs the whole chain from a
//! [`config::ScenarioConfig`], streaming frames at full time resolution
//! without ever materializing them, and every random draw is keyed by
//! `(master seed, domain, sweep index, frame index)` ([`seed`]) so results
//! are bit-identical regardless of worker count or chunk size.

// Parameter validation deliberately writes `!(x > 0.0)` instead of
// `x <= 0.0`: the negated form also rejects NaN, which must never pass a
// positivity check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod config;
pub mod detection;
pub mod error;
pub mod extraction;
pub mod interferometer;
pub mod laser;
pub mod pipeline;
pub mod seed;

pub use config::ScenarioConfig;
pub use error::{Error, Result};
pub use extraction::{BitStream, Provenance};
pub use pipeline::{run_scenario, write_outputs, ScenarioRun};
