//! Spectrum analysis of strong, discrete dephasing noise with a single qubit.
//!
//! The crate predicts the coherence of a pulse-modulated qubit exposed to a
//! handful of classical noise tones, simulates Ramsey fringes with projection
//! noise, and inverts scans of measured coherence back into tone frequencies
//! and amplitudes.
//!
//! Module map:
//! - [`schedule`]: equidistant and Uhrig pulse trains, toggling function and
//!   its filter transform;
//! - [`noise`]: tones, slow drift, unit conversion;
//! - [`coherence`]: Bessel-product, mixing, weak-limit and Monte Carlo
//!   coherence, fringe simulation;
//! - [`estimate`]: fringe fitting, scans, peak identification, zero-crossing
//!   magnitudes, the fine-tuning fit and Cramér-Rao bounds;
//! - [`io`]: CSV formats shared with the command-line tool.
//!
//! With the default `parallel` feature the Monte Carlo, fringe and scan loops
//! run on rayon; without it they run sequentially with identical output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bessel;
pub mod coherence;
pub mod error;
pub mod estimate;
pub mod io;
pub mod noise;
mod par;
pub mod rng;
pub mod schedule;

pub use coherence::{CoherenceValue, FringePoint, FringeScan, SamplingMode};
pub use error::{Error, Result};
pub use noise::{DiscreteSpectrum, NoiseTone, PhaseMode, SlowDrift, UnitsConfig};
pub use schedule::{ModulationScheme, PulseSchedule, ScheduleKind, TogglingFunction};
