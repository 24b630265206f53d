//! Discrete dephasing spectra.
//!
//! A spectrum is a finite list of tones `N_k cos(2 pi f_k t + alpha_k)` plus
//! an optional slow-drift term. Amplitudes are stored as angular frequencies
//! (rad/s); [`UnitsConfig`] converts from magnetic field.

use std::f64::consts::{PI, TAU};

use crate::error::{invalid, Result};

/// Electron g-factor used for the default Zeeman conversion.
pub const G_FACTOR: f64 = 2.0023;
/// Bohr magneton over Planck's constant, Hz per gauss.
pub const BOHR_MAGNETON_HZ_PER_GAUSS: f64 = 1.399_625e6;

/// Noise-index constant of square-wave (equidistant) modulation.
pub const SQUARE_WAVE_INDEX_CONSTANT: f64 = 2.0 / PI;
/// Noise-index constant quoted for Uhrig modulation.
pub const UHRIG_INDEX_CONSTANT: f64 = 0.42;

const MICROGAUSS: f64 = 1e-6;
const FREQ_DUPLICATE_TOL: f64 = 1e-9;

/// Field-to-phase-rate conversion `N = kappa * B`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitsConfig {
    kappa: f64,
}

impl UnitsConfig {
    /// `kappa` in rad s^-1 per gauss.
    pub fn new(kappa: f64) -> Result<Self> {
        if !(kappa > 0.0) || !kappa.is_finite() {
            return Err(invalid(format!("kappa must be positive, got {kappa}")));
        }
        Ok(Self { kappa })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// rad/s for a field given in microgauss.
    pub fn rad_s_from_microgauss(&self, b_ug: f64) -> f64 {
        self.kappa * b_ug * MICROGAUSS
    }

    pub fn microgauss_from_rad_s(&self, n: f64) -> f64 {
        n / (self.kappa * MICROGAUSS)
    }
}

impl Default for UnitsConfig {
    /// Ground-state Zeeman pair of a singly charged alkaline-earth ion.
    fn default() -> Self {
        Self { kappa: TAU * G_FACTOR * BOHR_MAGNETON_HZ_PER_GAUSS }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhaseMode {
    /// Phase drawn uniformly and independently per realisation.
    Random,
    /// Fixed offset (radians, stored in `[0, 2 pi)`) relative to a shared
    /// time origin.
    Locked(f64),
}

impl PhaseMode {
    pub fn locked(offset: f64) -> Self {
        PhaseMode::Locked(offset.rem_euclid(TAU))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseTone {
    amplitude: f64,
    frequency: f64,
    phase: PhaseMode,
}

impl NoiseTone {
    /// Tone with amplitude in rad/s.
    pub fn new(amplitude: f64, frequency: f64, phase: PhaseMode) -> Result<Self> {
        if !(amplitude >= 0.0) || !amplitude.is_finite() {
            return Err(invalid(format!("tone amplitude must be >= 0, got {amplitude}")));
        }
        if !(frequency >= 0.0) || !frequency.is_finite() {
            return Err(invalid(format!("tone frequency must be >= 0, got {frequency}")));
        }
        let phase = match phase {
            PhaseMode::Locked(a) => PhaseMode::locked(a),
            p => p,
        };
        Ok(Self { amplitude, frequency, phase })
    }

    /// Tone from a field amplitude in microgauss.
    pub fn from_field(b_ug: f64, frequency: f64, phase: PhaseMode, units: &UnitsConfig) -> Result<Self> {
        if !(b_ug >= 0.0) {
            return Err(invalid(format!("field amplitude must be >= 0, got {b_ug}")));
        }
        Self::new(units.rad_s_from_microgauss(b_ug), frequency, phase)
    }

    /// rad/s
    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn frequency(&self) -> f64 {
        self.frequency
    }

    pub fn phase(&self) -> PhaseMode {
        self.phase
    }

    pub fn field_microgauss(&self, units: &UnitsConfig) -> f64 {
        units.microgauss_from_rad_s(self.amplitude)
    }

    pub fn is_locked(&self) -> bool {
        matches!(self.phase, PhaseMode::Locked(_))
    }
}

/// Slow field drift, identified only through the product
/// `(g mu_B B_slow / h) * f_slow` in Hz^2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlowDrift {
    product_hz2: f64,
}

impl SlowDrift {
    pub fn new(product_hz2: f64) -> Result<Self> {
        if !(product_hz2 >= 0.0) || !product_hz2.is_finite() {
            return Err(invalid(format!("slow-drift product must be >= 0, got {product_hz2}")));
        }
        Ok(Self { product_hz2 })
    }

    pub fn product_hz2(&self) -> f64 {
        self.product_hz2
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DiscreteSpectrum {
    tones: Vec<NoiseTone>,
    slow_drift: Option<SlowDrift>,
}

impl DiscreteSpectrum {
    pub fn new(tones: Vec<NoiseTone>, slow_drift: Option<SlowDrift>) -> Result<Self> {
        for (i, a) in tones.iter().enumerate() {
            for b in &tones[i + 1..] {
                if (a.frequency - b.frequency).abs() <= FREQ_DUPLICATE_TOL {
                    return Err(invalid(format!("duplicate tone frequency {} Hz", a.frequency)));
                }
            }
        }
        Ok(Self { tones, slow_drift })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn tones(&self) -> &[NoiseTone] {
        &self.tones
    }

    pub fn slow_drift(&self) -> Option<SlowDrift> {
        self.slow_drift
    }

    pub fn slow_drift_hz2(&self) -> f64 {
        self.slow_drift.map_or(0.0, |d| d.product_hz2)
    }

    pub fn len(&self) -> usize {
        self.tones.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tones.is_empty()
    }

    /// Instantaneous `N(t)` for the given per-tone phases. The slow drift is
    /// not part of the time-domain signal.
    pub fn sample(&self, phases: &[f64], t: f64) -> Result<f64> {
        self.check_phases(phases)?;
        Ok(self.tones.iter().zip(phases).map(|(tone, &a)| tone.amplitude * (TAU * tone.frequency * t + a).cos()).sum())
    }

    pub(crate) fn check_phases(&self, phases: &[f64]) -> Result<()> {
        if phases.len() != self.tones.len() {
            return Err(invalid(format!("expected {} phases, got {}", self.tones.len(), phases.len())));
        }
        Ok(())
    }
}

/// `eta = c * N * T`.
pub fn noise_index(amplitude: f64, duration: f64, constant: f64) -> f64 {
    constant * amplitude * duration
}
