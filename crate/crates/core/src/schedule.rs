//! Pulse schedules, the toggling function they induce, and its windowed
//! Fourier transform.
//!
//! Pulses are instantaneous and ideal; each one flips the sign with which
//! dephasing noise accumulates into the qubit phase. The transform uses the
//! `exp(-2 pi i f t)` convention throughout.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{invalid, Result};

/// Golden-section stopping width for peak refinement, in Hz.
pub const PEAK_REFINE_TOL_HZ: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleKind {
    Equidistant,
    Uhrig,
    Custom,
}

/// Pulse times inside a sequence of total length `total_duration`.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseSchedule {
    total_duration: f64,
    pulse_times: Vec<f64>,
    kind: ScheduleKind,
}

impl PulseSchedule {
    /// `n` pulses with all `n + 1` intervals equal, so that the toggling
    /// function is a square wave of fundamental `f_mod`. The total length is
    /// `(n + 1) / (2 f_mod)`.
    pub fn equidistant(n: usize, f_mod: f64) -> Result<Self> {
        if !(f_mod > 0.0) || !f_mod.is_finite() {
            return Err(invalid(format!("modulation frequency must be positive, got {f_mod}")));
        }
        Self::equidistant_with_duration(n, (n as f64 + 1.0) / (2.0 * f_mod))
    }

    /// Equidistant schedule with an explicit total duration.
    pub fn equidistant_with_duration(n: usize, total_duration: f64) -> Result<Self> {
        check_duration(total_duration)?;
        let step = total_duration / (n as f64 + 1.0);
        let pulse_times = (1..=n).map(|j| j as f64 * step).collect();
        Ok(Self { total_duration, pulse_times, kind: ScheduleKind::Equidistant })
    }

    /// Uhrig sequence: `t_j = T sin^2(pi j / (2n + 2))`.
    pub fn uhrig(n: usize, total_duration: f64) -> Result<Self> {
        if n == 0 {
            return Err(invalid("Uhrig schedule needs at least one pulse"));
        }
        check_duration(total_duration)?;
        let denom = 2.0 * n as f64 + 2.0;
        let pulse_times = (1..=n)
            .map(|j| {
                let s = (PI * j as f64 / denom).sin();
                total_duration * s * s
            })
            .collect();
        Ok(Self { total_duration, pulse_times, kind: ScheduleKind::Uhrig })
    }

    pub fn custom(total_duration: f64, pulse_times: Vec<f64>) -> Result<Self> {
        check_duration(total_duration)?;
        let mut prev = 0.0;
        for &t in &pulse_times {
            if !(t > prev) || !(t < total_duration) {
                return Err(invalid(format!(
                    "pulse times must be strictly increasing inside (0, {total_duration}); offending value {t}"
                )));
            }
            prev = t;
        }
        Ok(Self { total_duration, pulse_times, kind: ScheduleKind::Custom })
    }

    pub fn total_duration(&self) -> f64 {
        self.total_duration
    }

    pub fn pulse_times(&self) -> &[f64] {
        &self.pulse_times
    }

    pub fn pulse_count(&self) -> usize {
        self.pulse_times.len()
    }

    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    /// The +-1 sign function between consecutive pulses.
    pub fn toggling(&self) -> TogglingFunction {
        let mut breakpoints = Vec::with_capacity(self.pulse_times.len() + 2);
        breakpoints.push(0.0);
        breakpoints.extend_from_slice(&self.pulse_times);
        breakpoints.push(self.total_duration);
        let signs = (0..=self.pulse_times.len()).map(|j| if j % 2 == 0 { 1.0 } else { -1.0 }).collect();
        TogglingFunction { breakpoints, signs }
    }
}

/// Pulse-train family used by scans and fits. Both families are indexed by
/// pulse count `n` and modulation frequency `f_mod`, with total duration
/// `(n + 1) / (2 f_mod)` so the two can be compared cell by cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModulationScheme {
    Equidistant,
    Uhrig,
}

impl ModulationScheme {
    pub fn duration(n: usize, f_mod: f64) -> f64 {
        (n as f64 + 1.0) / (2.0 * f_mod)
    }

    pub fn schedule(self, n: usize, f_mod: f64) -> Result<PulseSchedule> {
        match self {
            ModulationScheme::Equidistant => PulseSchedule::equidistant(n, f_mod),
            ModulationScheme::Uhrig => {
                if !(f_mod > 0.0) || !f_mod.is_finite() {
                    return Err(invalid(format!("modulation frequency must be positive, got {f_mod}")));
                }
                PulseSchedule::uhrig(n, Self::duration(n, f_mod))
            }
        }
    }

    /// Constant `c` in the noise index `eta = c N T`.
    pub fn index_constant(self) -> f64 {
        match self {
            ModulationScheme::Equidistant => crate::noise::SQUARE_WAVE_INDEX_CONSTANT,
            ModulationScheme::Uhrig => crate::noise::UHRIG_INDEX_CONSTANT,
        }
    }
}

impl std::str::FromStr for ModulationScheme {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "equidistant" | "equi" | "cpmg" => Ok(ModulationScheme::Equidistant),
            "uhrig" => Ok(ModulationScheme::Uhrig),
            other => Err(invalid(format!("unknown scheme '{other}' (expected equidistant or uhrig)"))),
        }
    }
}

fn check_duration(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(invalid(format!("total duration must be positive, got {t}")));
    }
    Ok(())
}

/// Piecewise-constant sign function `F(t)` on `[0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TogglingFunction {
    breakpoints: Vec<f64>,
    signs: Vec<f64>,
}

impl TogglingFunction {
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn signs(&self) -> &[f64] {
        &self.signs
    }

    pub fn total_duration(&self) -> f64 {
        *self.breakpoints.last().expect("at least two breakpoints")
    }

    /// `(start, end, sign)` for every constant stretch.
    pub fn intervals(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.breakpoints.windows(2).zip(&self.signs).map(|(w, &s)| (w[0], w[1], s))
    }

    /// Value of `F(t)`; right-continuous at breakpoints.
    pub fn value_at(&self, t: f64) -> f64 {
        let idx = self.breakpoints[1..].partition_point(|&b| b <= t);
        self.signs[idx.min(self.signs.len() - 1)]
    }

    /// `F_T(f) = int_0^T F(t) exp(-2 pi i f t) dt`.
    ///
    /// Each stretch is integrated as `L sinc(pi f L) exp(-i pi f (a + b))`,
    /// which is the exact closed form and stays well conditioned as `f -> 0`.
    pub fn transform(&self, f: f64) -> Complex64 {
        self.intervals()
            .map(|(a, b, s)| {
                let len = b - a;
                let mag = s * len * sinc(PI * f * len);
                Complex64::from_polar(1.0, -PI * f * (a + b)) * mag
            })
            .sum()
    }

    /// `dF_T/df` at `f = 0`, equal to `-pi i sum_j s_j (u_{j+1}^2 - u_j^2)`.
    pub fn dc_slope(&self) -> Complex64 {
        let s: f64 = self.intervals().map(|(a, b, s)| s * (b * b - a * a)).sum();
        Complex64::new(0.0, -PI * s)
    }

    /// Global maximiser of `|F_T(f)|` on `[f_lo, f_hi]`.
    ///
    /// A coarse grid (never coarser than `1/(4T)`) locates the main lobe,
    /// then golden-section search narrows it to [`PEAK_REFINE_TOL_HZ`].
    pub fn peak(&self, f_lo: f64, f_hi: f64, grid_step: f64) -> Result<(f64, f64)> {
        if !(f_lo < f_hi) || !f_lo.is_finite() || !f_hi.is_finite() {
            return Err(invalid(format!("empty frequency range [{f_lo}, {f_hi}]")));
        }
        if !(grid_step > 0.0) {
            return Err(invalid(format!("grid step must be positive, got {grid_step}")));
        }
        let step = grid_step.min(0.25 / self.total_duration());
        let count = ((f_hi - f_lo) / step).ceil() as usize;
        let mag = |f: f64| self.transform(f).norm();

        let mut best = (f_lo, mag(f_lo));
        for i in 1..=count {
            let f = (f_lo + i as f64 * step).min(f_hi);
            let m = mag(f);
            if m > best.1 {
                best = (f, m);
            }
        }

        let mut a = (best.0 - step).max(f_lo);
        let mut b = (best.0 + step).min(f_hi);
        let ratio = (5.0_f64.sqrt() - 1.0) / 2.0;
        let mut c = b - ratio * (b - a);
        let mut d = a + ratio * (b - a);
        let (mut mc, mut md) = (mag(c), mag(d));
        while b - a > PEAK_REFINE_TOL_HZ {
            if mc > md {
                b = d;
                d = c;
                md = mc;
                c = b - ratio * (b - a);
                mc = mag(c);
            } else {
                a = c;
                c = d;
                mc = md;
                d = a + ratio * (b - a);
                md = mag(d);
            }
        }
        let f_mid = 0.5 * (a + b);
        let refined =
            [(f_mid, mag(f_mid)), best]
                .into_iter()
                .fold((f_lo, f64::NEG_INFINITY), |acc, p| if p.1 > acc.1 { p } else { acc });
        Ok(refined)
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}
