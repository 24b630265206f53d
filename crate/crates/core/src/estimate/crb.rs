//! Cramér-Rao bounds for one tone's amplitude and frequency from binomial
//! Ramsey fringes.

use crate::bessel::{bessel_j0, bessel_j1};
use crate::coherence::uniform_phase_grid;
use crate::error::{invalid, Result};
use crate::schedule::ModulationScheme;

const P_CLAMP: f64 = 1e-9;
const SINGULAR_RATIO: f64 = 1e-12;

/// Measurement design: every `f_mod` setting is measured at every analysis
/// phase with `shots` repetitions.
#[derive(Debug, Clone, PartialEq)]
pub struct CrbDesign {
    pub scheme: ModulationScheme,
    pub n: usize,
    pub f_mods: Vec<f64>,
    pub shots: u32,
    pub phi_grid: Vec<f64>,
}

impl CrbDesign {
    /// A single modulation setting. Its information matrix has rank one at
    /// most, since the fringe depends on both parameters only through `A`.
    pub fn single(scheme: ModulationScheme, n: usize, f_mod: f64, shots: u32, phi_grid: Vec<f64>) -> Self {
        Self { scheme, n, f_mods: vec![f_mod], shots, phi_grid }
    }

    /// `settings` modulation frequencies spread evenly over
    /// `f0 +- span / T0`, with `T0` the sequence length at `f_mod = f0`.
    pub fn detuning_sweep(
        scheme: ModulationScheme,
        n: usize,
        f0: f64,
        settings: usize,
        span: f64,
        shots: u32,
        phi_points: usize,
    ) -> Self {
        let t0 = ModulationScheme::duration(n, f0);
        let f_mods = (0..settings)
            .map(|i| {
                let u = if settings > 1 { 2.0 * i as f64 / (settings - 1) as f64 - 1.0 } else { 0.0 };
                f0 + u * span / t0
            })
            .collect();
        Self { scheme, n, f_mods, shots, phi_grid: uniform_phase_grid(phi_points) }
    }

    /// Default sweep used for noise-index scans: 41 settings across the main
    /// lobe, 16 phases.
    pub fn standard(scheme: ModulationScheme, f0: f64, shots: u32) -> Self {
        Self::detuning_sweep(scheme, 11, f0, 41, 1.0, shots, 16)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrbResult {
    /// Fisher information for `(N [rad/s], f0 [Hz])`.
    pub information: [[f64; 2]; 2],
    /// Inverse information, or its pseudo-inverse when `singular`.
    pub covariance: [[f64; 2]; 2],
    pub singular: bool,
    /// Bound on the amplitude standard deviation; infinite when singular.
    pub sigma_amplitude: f64,
    pub sigma_frequency: f64,
}

/// Fisher information of the binomial fringe likelihood and its inverse.
///
/// `P = 1/2 - (A/2) cos(phi_rf)` with `A = J_0(N |F_T(f0)|)`; the derivative
/// of `|F_T|` with respect to `f0` is taken by central differences.
pub fn crb_single_tone(amplitude: f64, f0: f64, design: &CrbDesign) -> Result<CrbResult> {
    if !(amplitude >= 0.0) || !(f0 > 0.0) {
        return Err(invalid(format!("need N >= 0 and f0 > 0, got N = {amplitude}, f0 = {f0}")));
    }
    if design.f_mods.is_empty() || design.phi_grid.is_empty() || design.shots == 0 {
        return Err(invalid("CRB design needs settings, phases and shots"));
    }
    let h = 1e-6 * f0;
    let mut info = [[0.0; 2]; 2];
    for &f_mod in &design.f_mods {
        let tf = design.scheme.schedule(design.n, f_mod)?.toggling();
        let mag = tf.transform(f0).norm();
        let slope = (tf.transform(f0 + h).norm() - tf.transform(f0 - h).norm()) / (2.0 * h);
        let x = amplitude * mag;
        let a = bessel_j0(x);
        let d_a = [-bessel_j1(x) * mag, -bessel_j1(x) * amplitude * slope];
        for &phi in &design.phi_grid {
            let c = phi.cos();
            let p = (0.5 - 0.5 * a * c).clamp(P_CLAMP, 1.0 - P_CLAMP);
            let w = design.shots as f64 / (p * (1.0 - p));
            let d_p = [-0.5 * c * d_a[0], -0.5 * c * d_a[1]];
            for i in 0..2 {
                for j in 0..2 {
                    info[i][j] += w * d_p[i] * d_p[j];
                }
            }
        }
    }
    Ok(invert(info))
}

fn invert(info: [[f64; 2]; 2]) -> CrbResult {
    let (a, b, d) = (info[0][0], info[0][1], info[1][1]);
    let mean = 0.5 * (a + d);
    let disc = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    let (l_max, l_min) = (mean + disc, mean - disc);
    let singular = !(l_max > 0.0) || l_min <= SINGULAR_RATIO * l_max;
    if !singular {
        let det = a * d - b * b;
        let cov = [[d / det, -b / det], [-b / det, a / det]];
        return CrbResult {
            information: info,
            covariance: cov,
            singular,
            sigma_amplitude: cov[0][0].sqrt(),
            sigma_frequency: cov[1][1].sqrt(),
        };
    }
    let mut cov = [[0.0; 2]; 2];
    if l_max > 0.0 {
        // eigenvector of l_max
        let (vx, vy) = if b.abs() > 0.0 {
            (l_max - d, b)
        } else if a >= d {
            (1.0, 0.0)
        } else {
            (0.0, 1.0)
        };
        let norm = (vx * vx + vy * vy).sqrt();
        let (ux, uy) = (vx / norm, vy / norm);
        cov = [[ux * ux / l_max, ux * uy / l_max], [ux * uy / l_max, uy * uy / l_max]];
    }
    CrbResult {
        information: info,
        covariance: cov,
        singular,
        sigma_amplitude: f64::INFINITY,
        sigma_frequency: f64::INFINITY,
    }
}

/// Bounds for a range of noise indices at fixed nominal sequence length:
/// `N = eta / (c T0)` with `T0` the length at `f_mod = f0`.
pub fn eta_sweep(etas: &[f64], f0: f64, design: &CrbDesign) -> Result<Vec<(f64, CrbResult)>> {
    let t0 = ModulationScheme::duration(design.n, f0);
    let c = design.scheme.index_constant();
    etas.iter()
        .map(|&eta| {
            if !(eta > 0.0) {
                return Err(invalid(format!("noise index must be positive, got {eta}")));
            }
            Ok((eta, crb_single_tone(eta / (c * t0), f0, design)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_amplitude_has_no_information() {
        let d = CrbDesign::standard(ModulationScheme::Equidistant, 100.0, 100);
        let r = crb_single_tone(0.0, 100.0, &d).unwrap();
        assert_eq!(r.information[1][1], 0.0);
        assert!(r.singular);
        assert!(r.sigma_frequency.is_infinite());
    }

    #[test]
    fn single_setting_is_rank_one() {
        let d = CrbDesign::single(ModulationScheme::Equidistant, 11, 103.0, 100, uniform_phase_grid(16));
        let r = crb_single_tone(120.0, 100.0, &d).unwrap();
        assert!(r.singular);
        assert!(r.information[0][0] > 0.0 && r.information[1][1] > 0.0);
        // pseudo-inverse reproduces I on its range: I C I = I
        let i = r.information;
        let c = r.covariance;
        let ic = [
            [i[0][0] * c[0][0] + i[0][1] * c[1][0], i[0][0] * c[0][1] + i[0][1] * c[1][1]],
            [i[1][0] * c[0][0] + i[1][1] * c[1][0], i[1][0] * c[0][1] + i[1][1] * c[1][1]],
        ];
        for (row, want_row) in ic.iter().zip(&i) {
            for (col, want) in want_row.iter().enumerate() {
                let v = row[0] * i[0][col] + row[1] * i[1][col];
                assert!((v - want).abs() <= 1e-9 * want.abs().max(1.0));
            }
        }
    }

    #[test]
    fn sweep_is_invertible() {
        let d = CrbDesign::standard(ModulationScheme::Equidistant, 100.0, 100);
        let r = crb_single_tone(150.0, 100.0, &d).unwrap();
        assert!(!r.singular);
        assert!(r.sigma_frequency.is_finite() && r.sigma_amplitude.is_finite());
    }
}
