use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};

use crate::bessel::bessel_j0;
use crate::error::{invalid, Error, Result};
use crate::noise::UnitsConfig;
use crate::schedule::ModulationScheme;

/// One coherence measurement taken with `scheme.schedule(n, f_mod)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitPoint {
    pub n: usize,
    pub f_mod: f64,
    pub coherence: f64,
    /// Zero means "unweighted".
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// A step lowering the cost by less than this fraction ends the fit,
    /// provided the gradient test below also holds.
    pub cost_tol: f64,
    /// The gradient test: largest gradient component below
    /// `gradient_tol * max(1, chi_square)`. Meeting it with an absolute
    /// gradient below `gradient_tol` ends the fit on its own.
    pub gradient_tol: f64,
    /// Relative step of the central-difference Jacobian.
    pub fd_step: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { max_iterations: 200, cost_tol: 1e-10, gradient_tol: 1e-8, fd_step: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToneEstimate {
    pub frequency: f64,
    pub amplitude_ug: f64,
    pub sigma_ug: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub tones: Vec<ToneEstimate>,
    /// `(P, sigma_P)` in Hz^2 when the drift was fitted.
    pub slow_drift: Option<(f64, f64)>,
    /// Weighted residual sum of squares.
    pub chi_square: f64,
    pub reduced_chi_square: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Largest component of the cost gradient at the final point.
    pub gradient_norm: f64,
    /// Cost after every accepted step, starting with the initial cost.
    pub cost_history: Vec<f64>,
}

/// Below this a parameter is treated as null when building the covariance.
const NULL_FLOOR: f64 = 1e-3;
const THETA_FLOOR: f64 = 0.03;

/// Bessel-product model with the filter responses precomputed per point.
struct Model {
    /// `kappa |F_T(f_k)|` in rad/s per microgauss, point-major.
    tone_gain: Vec<f64>,
    /// `2 pi |F_T'(0)|` per point.
    drift_gain: Vec<f64>,
    weights: Vec<f64>,
    targets: Vec<f64>,
    tones: usize,
    fit_drift: bool,
}

impl Model {
    fn new(
        data: &[FitPoint],
        scheme: ModulationScheme,
        freqs: &[f64],
        fit_drift: bool,
        units: &UnitsConfig,
    ) -> Result<Self> {
        let mut tone_gain = Vec::with_capacity(data.len() * freqs.len());
        let mut drift_gain = Vec::with_capacity(data.len());
        for p in data {
            let tf = scheme.schedule(p.n, p.f_mod)?.toggling();
            for &f in freqs {
                tone_gain.push(units.rad_s_from_microgauss(tf.transform(f).norm()));
            }
            drift_gain.push(TAU * tf.dc_slope().norm());
        }
        Ok(Self {
            tone_gain,
            drift_gain,
            weights: data.iter().map(|p| if p.sigma > 0.0 { 1.0 / p.sigma } else { 1.0 }).collect(),
            targets: data.iter().map(|p| p.coherence).collect(),
            tones: freqs.len(),
            fit_drift,
        })
    }

    fn params(&self) -> usize {
        self.tones + usize::from(self.fit_drift)
    }

    /// Coherence at point `i` for physical parameters (microgauss, Hz^2).
    fn predict(&self, i: usize, p: &[f64]) -> f64 {
        let gains = &self.tone_gain[i * self.tones..(i + 1) * self.tones];
        let mut a: f64 = gains.iter().zip(p).map(|(g, b)| bessel_j0(g * b)).product();
        if self.fit_drift {
            a *= bessel_j0(self.drift_gain[i] * p[self.tones]);
        }
        a
    }

    fn residuals(&self, p: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.targets.len(),
            (0..self.targets.len()).map(|i| (self.predict(i, p) - self.targets[i]) * self.weights[i]),
        )
    }

    /// Central-difference Jacobian of the residuals with respect to `x`,
    /// where `to_phys` maps `x` to physical parameters.
    fn jacobian(&self, x: &[f64], step: &[f64], to_phys: impl Fn(&[f64]) -> Vec<f64>) -> DMatrix<f64> {
        let m = self.targets.len();
        let mut jac = DMatrix::zeros(m, x.len());
        let mut probe = x.to_vec();
        for j in 0..x.len() {
            let h = step[j];
            probe[j] = x[j] + h;
            let up = self.residuals(&to_phys(&probe));
            probe[j] = x[j] - h;
            let down = self.residuals(&to_phys(&probe));
            probe[j] = x[j];
            jac.set_column(j, &((up - down) / (2.0 * h)));
        }
        jac
    }
}

fn squared(theta: &[f64]) -> Vec<f64> {
    theta.iter().map(|t| t * t).collect()
}

fn cost(r: &DVector<f64>) -> f64 {
    0.5 * r.norm_squared()
}

/// Stage three: joint weighted least-squares refinement of tone amplitudes
/// (and optionally the slow-drift product) at fixed tone frequencies.
///
/// Levenberg-Marquardt on square-root parameters keeps amplitudes
/// non-negative. Uncertainties come from the covariance at the optimum,
/// scaled by the reduced chi-square; a parameter stuck at zero is reported
/// through its square, whose uncertainty gives a detection-level sigma.
///
/// `slow_drift` is the starting value of the drift product; `None` leaves the
/// drift out of the model.
pub fn fine_tune_fit(
    data: &[FitPoint],
    scheme: ModulationScheme,
    tone_freqs: &[f64],
    initial_ug: &[f64],
    slow_drift: Option<f64>,
    units: &UnitsConfig,
    options: &FitOptions,
) -> Result<EstimateReport> {
    if tone_freqs.is_empty() {
        return Err(invalid("model needs at least one tone"));
    }
    if initial_ug.len() != tone_freqs.len() {
        return Err(invalid(format!("{} initial amplitudes for {} tones", initial_ug.len(), tone_freqs.len())));
    }
    if initial_ug.iter().chain(slow_drift.as_ref()).any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(invalid("initial values must be finite and non-negative"));
    }
    let model = Model::new(data, scheme, tone_freqs, slow_drift.is_some(), units)?;
    let npar = model.params();
    if data.len() < npar + 2 {
        return Err(invalid(format!("{} data points for {npar} parameters", data.len())));
    }

    let mut theta: Vec<f64> = initial_ug.iter().chain(slow_drift.as_ref()).map(|v| v.sqrt().max(THETA_FLOOR)).collect();
    let mut r = model.residuals(&squared(&theta));
    let mut current = cost(&r);
    let mut history = vec![current];
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut stalled = false;
    let mut iterations = 0;
    let mut gradient_norm;

    loop {
        let steps: Vec<f64> = theta.iter().map(|t| options.fd_step * t.abs().max(1e-3)).collect();
        let jac = model.jacobian(&theta, &steps, squared);
        let grad = jac.transpose() * &r;
        gradient_norm = grad.amax();
        let stationary = gradient_norm < options.gradient_tol * (2.0 * current).max(1.0);
        if stationary && (stalled || current < 1e-30 || gradient_norm < options.gradient_tol) {
            converged = true;
            break;
        }
        if iterations >= options.max_iterations {
            break;
        }
        iterations += 1;

        let normal = jac.transpose() * &jac;
        let scale_floor = 1e-12 * normal.diagonal().max().max(1e-300);
        let mut accepted = false;
        while lambda < 1e16 {
            let mut damped = normal.clone();
            for j in 0..npar {
                damped[(j, j)] += lambda * normal[(j, j)].max(scale_floor);
            }
            let Some(chol) = damped.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let delta = chol.solve(&(-&grad));
            let trial: Vec<f64> = theta.iter().zip(delta.iter()).map(|(t, d)| t + d).collect();
            let r_trial = model.residuals(&squared(&trial));
            let c_trial = cost(&r_trial);
            if c_trial < current {
                stalled = (current - c_trial) / current < options.cost_tol;
                theta = trial;
                r = r_trial;
                current = c_trial;
                history.push(current);
                lambda = (lambda / 3.0).max(1e-12);
                accepted = true;
                break;
            }
            lambda *= 4.0;
        }
        if !accepted {
            // no downhill step left: converged only if the gradient agrees
            converged = stationary;
            break;
        }
    }

    let phys = squared(&theta);
    let chi_square = 2.0 * current;
    let dof = (data.len() - npar) as f64;
    let reduced = chi_square / dof;
    let sigmas = covariance_sigmas(&model, &phys, options.fd_step, reduced)?;

    let tones = tone_freqs
        .iter()
        .zip(&phys)
        .zip(&sigmas)
        .map(|((&frequency, &amplitude_ug), &sigma_ug)| ToneEstimate { frequency, amplitude_ug, sigma_ug })
        .collect();
    let slow_drift = model.fit_drift.then(|| (phys[npar - 1], sigmas[npar - 1]));
    Ok(EstimateReport {
        tones,
        slow_drift,
        chi_square,
        reduced_chi_square: reduced,
        iterations,
        converged,
        gradient_norm,
        cost_history: history,
    })
}

/// Marginal standard deviations at the optimum. Parameters below
/// [`NULL_FLOOR`] are linearised in their square, where the model is smooth.
fn covariance_sigmas(model: &Model, phys: &[f64], fd_step: f64, reduced: f64) -> Result<Vec<f64>> {
    let null: Vec<bool> = phys.iter().map(|&p| p < NULL_FLOOR).collect();
    let x: Vec<f64> = phys.iter().zip(&null).map(|(&p, &z)| if z { p * p } else { p }).collect();
    let to_phys =
        |x: &[f64]| -> Vec<f64> { x.iter().zip(&null).map(|(&v, &z)| if z { v.max(0.0).sqrt() } else { v }).collect() };
    let steps: Vec<f64> = x
        .iter()
        .zip(&null)
        .map(|(&v, &z)| if z { (NULL_FLOOR * NULL_FLOOR).max(v) } else { fd_step * v.abs().max(1e-3) })
        .collect();
    // forward differences for null parameters so the probe stays at u >= 0
    let mut jac = model.jacobian(&x, &steps, to_phys);
    for (j, &z) in null.iter().enumerate() {
        if z {
            let mut probe = x.clone();
            probe[j] += steps[j];
            let up = model.residuals(&to_phys(&probe));
            let base = model.residuals(&to_phys(&x));
            jac.set_column(j, &((up - base) / steps[j]));
        }
    }
    let normal = jac.transpose() * &jac;
    let svd = normal.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-14 * smax) {
        return Err(Error::IllConditioned("normal matrix of the fit is singular".into()));
    }
    let inv =
        normal.try_inverse().ok_or_else(|| Error::IllConditioned("normal matrix of the fit is singular".into()))?;
    Ok((0..x.len())
        .map(|j| {
            let var = (inv[(j, j)] * reduced).max(0.0);
            if null[j] {
                var.sqrt().sqrt()
            } else {
                var.sqrt()
            }
        })
        .collect())
}
