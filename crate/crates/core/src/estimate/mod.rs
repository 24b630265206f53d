//! Noise characterisation: from fringes and coherence scans to tone
//! frequencies and amplitudes.
//!
//! The pipeline runs in three stages. [`identify_peaks`] finds candidate
//! frequencies in a scan, [`magnitude_by_zero_crossing`] turns the first sign
//! change of an `n` series into a starting amplitude, and [`fine_tune_fit`]
//! refines all amplitudes (and the slow drift) jointly. [`fit_fringe`]
//! extracts each coherence value from fringe data, and [`crb`] bounds what
//! any of this can achieve.

pub mod crb;
mod fit;
mod fringe_fit;
mod peaks;
mod scan;
mod zero_cross;

pub use crb::{crb_single_tone, eta_sweep, CrbDesign, CrbResult};
pub use fit::{fine_tune_fit, EstimateReport, FitOptions, FitPoint, ToneEstimate};
pub use fringe_fit::{fit_fringe, FringeFit};
pub use peaks::{identify_peaks, CandidateTone, PeakMode, PeakOptions, DEFAULT_DIP_THRESHOLD};
pub use scan::{scan_coherence, Measurement, ScanCell, ScanGrid};
pub use zero_cross::{magnitude_by_zero_crossing, SeriesPoint, ZeroCrossing};
