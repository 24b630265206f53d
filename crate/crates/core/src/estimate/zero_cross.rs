use crate::bessel::J0_FIRST_ZERO;
use crate::error::{invalid, Error, Result};
use crate::noise::UnitsConfig;
use crate::schedule::ModulationScheme;

/// One point of a coherence-versus-pulse-count series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesPoint {
    pub n: usize,
    pub coherence: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroCrossing {
    pub amplitude_ug: f64,
    pub amplitude_rad_s: f64,
    /// Interpolated sequence length at which `A` vanishes.
    pub crossing_duration: f64,
    /// `|F_T(f_k)|` at the crossing.
    pub filter_magnitude: f64,
    /// `c N T` at the crossing, with `c` the scheme's index constant.
    pub eta: f64,
}

/// Stage two: amplitude of the tone at `freq` from the first sign change of
/// `A(n)` measured with the modulation centred on that tone.
///
/// The crossing time is interpolated linearly in `T = (n + 1) / (2 f)`
/// between the bracketing points, `|F_T(f)|` is interpolated the same way
/// between the two bracketing schedules, and `N |F_T| = z0` is solved for `N`.
pub fn magnitude_by_zero_crossing(
    series: &[SeriesPoint],
    freq: f64,
    scheme: ModulationScheme,
    units: &UnitsConfig,
) -> Result<ZeroCrossing> {
    if !(freq > 0.0) {
        return Err(invalid(format!("tone frequency must be positive, got {freq}")));
    }
    if series.windows(2).any(|w| w[1].n <= w[0].n) {
        return Err(invalid("series must be sorted by strictly increasing n"));
    }
    let Some(i) = series.windows(2).position(|w| w[0].coherence > 0.0 && w[1].coherence <= 0.0) else {
        return Err(Error::NotCrossed { last: series.last().map_or(f64::NAN, |p| p.coherence) });
    };
    let (lo, hi) = (series[i], series[i + 1]);
    let t_lo = ModulationScheme::duration(lo.n, freq);
    let t_hi = ModulationScheme::duration(hi.n, freq);
    let frac = lo.coherence / (lo.coherence - hi.coherence);
    let t_star = t_lo + frac * (t_hi - t_lo);

    let mag = |n: usize| -> Result<f64> { Ok(scheme.schedule(n, freq)?.toggling().transform(freq).norm()) };
    let filter_magnitude = mag(lo.n)? + frac * (mag(hi.n)? - mag(lo.n)?);
    if !(filter_magnitude > 0.0) {
        return Err(Error::IllConditioned(format!("filter does not pass {freq} Hz at the crossing")));
    }
    let amplitude_rad_s = J0_FIRST_ZERO / filter_magnitude;
    Ok(ZeroCrossing {
        amplitude_ug: units.microgauss_from_rad_s(amplitude_rad_s),
        amplitude_rad_s,
        crossing_duration: t_star,
        filter_magnitude,
        eta: scheme.index_constant() * amplitude_rad_s * t_star,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(n: usize, a: f64) -> SeriesPoint {
        SeriesPoint { n, coherence: a, sigma: 0.0 }
    }

    #[test]
    fn no_crossing_is_reported() {
        let s = [point(1, 0.9), point(2, 0.7), point(3, 0.4)];
        let err =
            magnitude_by_zero_crossing(&s, 100.0, ModulationScheme::Equidistant, &UnitsConfig::default()).unwrap_err();
        assert!(matches!(err, Error::NotCrossed { last } if (last - 0.4).abs() < 1e-15));
    }

    #[test]
    fn exact_zero_on_grid_point() {
        // A vanishes exactly at n = 7: the estimate uses that schedule's filter
        let u = UnitsConfig::default();
        let s = [point(5, 0.3), point(7, 0.0), point(9, -0.2)];
        let z = magnitude_by_zero_crossing(&s, 100.0, ModulationScheme::Equidistant, &u).unwrap();
        let mag = ModulationScheme::Equidistant.schedule(7, 100.0).unwrap().toggling().transform(100.0).norm();
        assert!((z.amplitude_rad_s - J0_FIRST_ZERO / mag).abs() < 1e-12);
        assert!((z.crossing_duration - 0.04).abs() < 1e-15);
    }

    #[test]
    fn unsorted_series_rejected() {
        let s = [point(5, 0.3), point(3, -0.1)];
        assert!(magnitude_by_zero_crossing(&s, 100.0, ModulationScheme::Equidistant, &UnitsConfig::default()).is_err());
    }
}
