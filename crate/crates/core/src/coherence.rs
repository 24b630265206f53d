//! Coherence of a dephased qubit under pulse modulation.
//!
//! Four routes to `A = <exp(i phi)>`:
//! - [`coherence_product`]: product of `J_0` factors for independently
//!   phased tones;
//! - [`coherence_mixing`]: generalised Bessel sum over resonant integer
//!   combinations of phase-locked tones;
//! - [`weak_coherence`]: Gaussian (second-order) approximation;
//! - [`coherence_monte_carlo`]: direct average of `cos(phi)` over drawn
//!   noise phases.
//!
//! [`simulate_fringe`] turns the same per-shot phase model into Ramsey fringe
//! data with projection noise.

use std::f64::consts::{PI, TAU};

use rand::Rng;

use crate::bessel::{bessel_j0, bessel_j_sequence};
use crate::error::{invalid, Error, Result};
use crate::noise::{DiscreteSpectrum, PhaseMode};
use crate::par::map_indexed;
use crate::rng::{substream, StreamRng};
use crate::schedule::TogglingFunction;

pub const DEFAULT_MIXING_ORDER: u32 = 6;
pub const MAX_MIXING_ORDER: u32 = 8;
pub const DEFAULT_RESONANCE_TOL_HZ: f64 = 1e-6;
pub const MIN_MC_SAMPLES: usize = 100;

const MC_CHUNK: usize = 2048;

/// Signed coherence, with a standard error when it was estimated by sampling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceValue {
    pub value: f64,
    pub stderr: Option<f64>,
}

impl CoherenceValue {
    pub fn exact(value: f64) -> Self {
        Self { value, stderr: None }
    }

    /// `R(T) = -ln(A) / T`; only defined for positive coherence.
    pub fn decay_rate(&self, duration: f64) -> Option<f64> {
        (self.value > 0.0).then(|| -self.value.ln() / duration)
    }
}

/// How noise phases are drawn for each realisation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SamplingMode {
    /// Every tone phase uniform and independent.
    IndependentPhases,
    /// A shared time origin uniform in `[0, period)`; locked tones take
    /// `offset + 2 pi f tau`, random tones stay independent.
    CommonTimeOrigin { period: f64 },
}

impl SamplingMode {
    fn validate(&self) -> Result<()> {
        if let SamplingMode::CommonTimeOrigin { period } = *self {
            if !(period > 0.0) || !period.is_finite() {
                return Err(invalid(format!("common-origin period must be positive, got {period}")));
            }
        }
        Ok(())
    }
}

/// `phi = int_0^T N(t) F(t) dt` for one set of tone phases; slow drift is
/// not included.
pub fn phase_integral(spectrum: &DiscreteSpectrum, phases: &[f64], tf: &TogglingFunction) -> Result<f64> {
    spectrum.check_phases(phases)?;
    let mut phi = 0.0;
    for (tone, &alpha) in spectrum.tones().iter().zip(phases) {
        let omega = TAU * tone.frequency();
        let part: f64 = tf
            .intervals()
            .map(|(a, b, s)| {
                // int_a^b cos(w t + alpha) dt
                let half = 0.5 * omega * (b - a);
                s * (b - a) * sinc(half) * (0.5 * omega * (a + b) + alpha).cos()
            })
            .sum();
        phi += tone.amplitude() * part;
    }
    Ok(phi)
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Bessel argument `N_k |F_T(f_k)|` of every tone.
pub fn tone_arguments(spectrum: &DiscreteSpectrum, tf: &TogglingFunction) -> Vec<f64> {
    spectrum.tones().iter().map(|t| t.amplitude() * tf.transform(t.frequency()).norm()).collect()
}

/// Bessel argument of the slow drift, `2 pi P |dF_T/df (0)|`.
pub fn drift_argument(spectrum: &DiscreteSpectrum, tf: &TogglingFunction) -> f64 {
    TAU * spectrum.slow_drift_hz2() * tf.dc_slope().norm()
}

fn require_random(spectrum: &DiscreteSpectrum) -> Result<()> {
    if let Some(t) = spectrum.tones().iter().find(|t| t.is_locked()) {
        return Err(Error::ModeMismatch(format!("tone at {} Hz is phase-locked; use coherence_mixing", t.frequency())));
    }
    Ok(())
}

/// `A = prod_k J_0(N_k |F_T(f_k)|) * J_0(2 pi P |F_T'(0)|)`.
pub fn coherence_product(spectrum: &DiscreteSpectrum, tf: &TogglingFunction) -> Result<CoherenceValue> {
    require_random(spectrum)?;
    Ok(CoherenceValue::exact(product_unchecked(spectrum, tf)))
}

pub(crate) fn product_unchecked(spectrum: &DiscreteSpectrum, tf: &TogglingFunction) -> f64 {
    let tones: f64 = tone_arguments(spectrum, tf).into_iter().map(bessel_j0).product();
    tones * bessel_j0(drift_argument(spectrum, tf))
}

/// Weak-noise limit `exp(-<phi^2>/2)` with `<phi^2> = sum_k x_k^2 / 2`.
pub fn weak_coherence(spectrum: &DiscreteSpectrum, tf: &TogglingFunction) -> Result<CoherenceValue> {
    require_random(spectrum)?;
    let drift = drift_argument(spectrum, tf);
    let exponent: f64 = tone_arguments(spectrum, tf).iter().map(|x| x * x / 4.0).sum::<f64>() + drift * drift / 4.0;
    Ok(CoherenceValue::exact((-exponent).exp()))
}

/// Generalised Bessel sum for phase-locked tones.
///
/// Sums over integer vectors `h` with `sum |h_k| <= max_order`,
/// `|sum h_k f_k| <= resonance_tol` and even `sum h_k`:
/// `(-1)^(sum h / 2) cos(sum h_k a_k) prod_k J_{h_k}(x_k)`, where
/// `a_k = offset_k - arg F_T(f_k)` carries the filter phase. The slow drift
/// enters as an extra `J_0` factor.
pub fn coherence_mixing(
    spectrum: &DiscreteSpectrum,
    tf: &TogglingFunction,
    max_order: u32,
    resonance_tol: f64,
) -> Result<CoherenceValue> {
    if max_order == 0 || max_order > MAX_MIXING_ORDER {
        return Err(invalid(format!("mixing order must be in 1..={MAX_MIXING_ORDER}, got {max_order}")));
    }
    if !(resonance_tol >= 0.0) {
        return Err(invalid(format!("resonance tolerance must be >= 0, got {resonance_tol}")));
    }
    let mut offsets = Vec::with_capacity(spectrum.len());
    for tone in spectrum.tones() {
        match tone.phase() {
            PhaseMode::Locked(off) => offsets.push(off),
            PhaseMode::Random => {
                return Err(Error::ModeMismatch(format!(
                    "tone at {} Hz has a random phase; mixing needs locked tones",
                    tone.frequency()
                )))
            }
        }
    }

    let order = max_order as usize;
    let tones = spectrum.tones();
    let mut bessel = Vec::with_capacity(tones.len());
    let mut shifted = Vec::with_capacity(tones.len());
    for (tone, off) in tones.iter().zip(&offsets) {
        let ft = tf.transform(tone.frequency());
        bessel.push(bessel_j_sequence(tone.amplitude() * ft.norm(), order));
        shifted.push(off - ft.arg());
    }
    let freqs: Vec<f64> = tones.iter().map(|t| t.frequency()).collect();

    let ctx = MixingSum { bessel: &bessel, shifted: &shifted, freqs: &freqs, tol: resonance_tol };
    let mut h = vec![0i32; tones.len()];
    let total = ctx.accumulate(&mut h, 0, order as i32);
    Ok(CoherenceValue::exact(total * bessel_j0(drift_argument(spectrum, tf))))
}

struct MixingSum<'a> {
    bessel: &'a [Vec<f64>],
    shifted: &'a [f64],
    freqs: &'a [f64],
    tol: f64,
}

impl MixingSum<'_> {
    fn accumulate(&self, h: &mut [i32], k: usize, budget: i32) -> f64 {
        if k == h.len() {
            return self.term(h);
        }
        let mut sum = 0.0;
        for hk in -budget..=budget {
            h[k] = hk;
            sum += self.accumulate(h, k + 1, budget - hk.abs());
        }
        h[k] = 0;
        sum
    }

    fn term(&self, h: &[i32]) -> f64 {
        let total: i32 = h.iter().sum();
        if total % 2 != 0 {
            return 0.0;
        }
        let detune: f64 = h.iter().zip(self.freqs).map(|(&hk, f)| hk as f64 * f).sum();
        if detune.abs() > self.tol {
            return 0.0;
        }
        let sign = if (total / 2) % 2 == 0 { 1.0 } else { -1.0 };
        let angle: f64 = h.iter().zip(self.shifted).map(|(&hk, a)| hk as f64 * a).sum();
        let mut prod = 1.0;
        for (&hk, seq) in h.iter().zip(self.bessel) {
            let m = hk.unsigned_abs() as usize;
            let j = seq[m];
            prod *= if hk < 0 && m % 2 == 1 { -j } else { j };
        }
        sign * angle.cos() * prod
    }
}

/// Monte Carlo estimate with the imaginary part kept as a diagnostic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate {
    pub coherence: CoherenceValue,
    pub imaginary: f64,
    pub imaginary_stderr: f64,
    pub samples: usize,
}

/// Per-tone linear response `phi_k = N_k (C_k cos a - S_k sin a)`, an exact
/// rewriting of [`phase_integral`] that is cheap to evaluate per sample.
#[derive(Debug, Clone)]
struct PhaseModel {
    cos_weight: Vec<f64>,
    sin_weight: Vec<f64>,
    freqs: Vec<f64>,
    locked: Vec<Option<f64>>,
    drift: f64,
}

impl PhaseModel {
    fn new(spectrum: &DiscreteSpectrum, tf: &TogglingFunction) -> Self {
        let d = spectrum.len();
        let mut cos_weight = Vec::with_capacity(d);
        let mut sin_weight = Vec::with_capacity(d);
        for tone in spectrum.tones() {
            let single = DiscreteSpectrum::new(vec![*tone], None).expect("single tone");
            cos_weight.push(phase_integral(&single, &[0.0], tf).expect("one phase"));
            sin_weight.push(-phase_integral(&single, &[PI / 2.0], tf).expect("one phase"));
        }
        let locked = spectrum
            .tones()
            .iter()
            .map(|t| match t.phase() {
                PhaseMode::Locked(off) => Some(off),
                PhaseMode::Random => None,
            })
            .collect();
        Self {
            cos_weight,
            sin_weight,
            freqs: spectrum.tones().iter().map(|t| t.frequency()).collect(),
            locked,
            drift: drift_argument(spectrum, tf),
        }
    }

    /// One noise realisation.
    fn draw(&self, mode: SamplingMode, rng: &mut StreamRng) -> f64 {
        let origin = match mode {
            SamplingMode::CommonTimeOrigin { period } => Some(rng.random::<f64>() * period),
            SamplingMode::IndependentPhases => None,
        };
        let mut phi = 0.0;
        for k in 0..self.freqs.len() {
            let alpha = match (origin, self.locked[k]) {
                (Some(tau), Some(off)) => off + TAU * self.freqs[k] * tau,
                _ => rng.random::<f64>() * TAU,
            };
            phi += self.cos_weight[k] * alpha.cos() - self.sin_weight[k] * alpha.sin();
        }
        if self.drift > 0.0 {
            phi += self.drift * (rng.random::<f64>() * TAU).cos();
        }
        phi
    }
}

/// Average `exp(i phi)` over `samples` noise realisations.
///
/// Samples are split into fixed chunks, each with its own random stream, and
/// chunk sums are combined in order; the result depends only on `seed`.
pub fn coherence_monte_carlo(
    spectrum: &DiscreteSpectrum,
    tf: &TogglingFunction,
    samples: usize,
    seed: u64,
    mode: SamplingMode,
) -> Result<MonteCarloEstimate> {
    if samples < MIN_MC_SAMPLES {
        return Err(invalid(format!("need at least {MIN_MC_SAMPLES} samples, got {samples}")));
    }
    mode.validate()?;
    if spectrum.is_empty() && spectrum.slow_drift_hz2() == 0.0 {
        return Ok(MonteCarloEstimate {
            coherence: CoherenceValue { value: 1.0, stderr: Some(0.0) },
            imaginary: 0.0,
            imaginary_stderr: 0.0,
            samples,
        });
    }
    let model = PhaseModel::new(spectrum, tf);
    let chunks = samples.div_ceil(MC_CHUNK);
    let partial = map_indexed(chunks, |c| {
        let mut rng = substream(seed, c as u64);
        let count = MC_CHUNK.min(samples - c * MC_CHUNK);
        let mut acc = [0.0f64; 4];
        for _ in 0..count {
            let phi = model.draw(mode, &mut rng);
            let (s, co) = phi.sin_cos();
            acc[0] += co;
            acc[1] += co * co;
            acc[2] += s;
            acc[3] += s * s;
        }
        acc
    });
    let mut total = [0.0f64; 4];
    for acc in &partial {
        for (t, a) in total.iter_mut().zip(acc) {
            *t += a;
        }
    }
    let m = samples as f64;
    let stats = |sum: f64, sq: f64| {
        let mean = sum / m;
        let var = ((sq - m * mean * mean) / (m - 1.0)).max(0.0);
        (mean, (var / m).sqrt())
    };
    let (re, re_err) = stats(total[0], total[1]);
    let (im, im_err) = stats(total[2], total[3]);
    Ok(MonteCarloEstimate {
        coherence: CoherenceValue { value: re, stderr: Some(re_err) },
        imaginary: im,
        imaginary_stderr: im_err,
        samples,
    })
}

/// `P_up = 1/2 - (A/2) cos(phi_rf)`.
pub fn ramsey_probability(coherence: f64, phi_rf: f64) -> Result<f64> {
    if !(coherence.abs() <= 1.0) {
        return Err(invalid(format!("coherence must lie in [-1, 1], got {coherence}")));
    }
    Ok(0.5 - 0.5 * coherence * phi_rf.cos())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FringePoint {
    pub phi_rf: f64,
    pub p_up: f64,
    pub shots: u32,
}

/// Measured or simulated `P_up` versus analysis phase.
#[derive(Debug, Clone, PartialEq)]
pub struct FringeScan {
    points: Vec<FringePoint>,
}

impl FringeScan {
    pub fn new(points: Vec<FringePoint>) -> Result<Self> {
        for (i, p) in points.iter().enumerate() {
            if p.shots == 0 {
                return Err(invalid(format!("fringe point {i} has zero shots")));
            }
            if !(0.0..=1.0).contains(&p.p_up) {
                return Err(invalid(format!("fringe point {i} has p_up {} outside [0, 1]", p.p_up)));
            }
            if points[..i].iter().any(|q| q.phi_rf == p.phi_rf) {
                return Err(invalid(format!("duplicate phase {} in fringe scan", p.phi_rf)));
            }
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[FringePoint] {
        &self.points
    }
}

/// `count` equally spaced analysis phases in `[0, 2 pi)`.
pub fn uniform_phase_grid(count: usize) -> Vec<f64> {
    (0..count).map(|i| TAU * i as f64 / count as f64).collect()
}

/// Shot-by-shot Ramsey simulation.
///
/// Each shot draws a noise realisation, forms `p = 1/2 - cos(phi_rf - phi)/2`
/// and records one Bernoulli outcome. Grid point `i` uses random stream `i`.
pub fn simulate_fringe(
    spectrum: &DiscreteSpectrum,
    tf: &TogglingFunction,
    phi_grid: &[f64],
    shots: u32,
    seed: u64,
    mode: SamplingMode,
) -> Result<FringeScan> {
    if shots == 0 {
        return Err(invalid("shots per point must be >= 1"));
    }
    if phi_grid.is_empty() {
        return Err(invalid("phase grid is empty"));
    }
    mode.validate()?;
    let model = PhaseModel::new(spectrum, tf);
    let points = map_indexed(phi_grid.len(), |i| {
        let phi_rf = phi_grid[i];
        let mut rng = substream(seed, i as u64);
        let mut ups = 0u32;
        for _ in 0..shots {
            let phi = model.draw(mode, &mut rng);
            let p = 0.5 - 0.5 * (phi_rf - phi).cos();
            if rng.random::<f64>() < p {
                ups += 1;
            }
        }
        FringePoint { phi_rf, p_up: ups as f64 / shots as f64, shots }
    });
    FringeScan::new(points)
}
