mod common;

use std::f64::consts::{PI, TAU};

use proptest::prelude::*;
use qspec::schedule::PEAK_REFINE_TOL_HZ;
use qspec::{ModulationScheme, PulseSchedule};

use common::{arb_schedule, toggled_integral};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transform_matches_quadrature(s in arb_schedule(25), f in 0.0f64..400.0) {
        let t = s.total_duration();
        let ft = s.toggling().transform(f);
        let piece = 0.1 / f.max(1.0);
        let re = toggled_integral(&s, &|x| (TAU * f * x).cos(), piece, 1e-15);
        let im = toggled_integral(&s, &|x| -(TAU * f * x).sin(), piece, 1e-15);
        // scaled by T, the largest value |F_T| can take
        prop_assert!((ft.re - re).abs() <= 1e-8 * t, "re {} vs {}", ft.re, re);
        prop_assert!((ft.im - im).abs() <= 1e-8 * t, "im {} vs {}", ft.im, im);
    }

    #[test]
    fn transform_is_continuous_at_zero(s in arb_schedule(25), f in 0.0f64..1e-6) {
        let tf = s.toggling();
        let at_zero = tf.transform(0.0);
        prop_assert!(at_zero.im == 0.0);
        prop_assert!((tf.transform(f).norm() - at_zero.norm()).abs() <= 1e-9 * s.total_duration());
    }

    #[test]
    fn dc_slope_matches_finite_difference(s in arb_schedule(25)) {
        let tf = s.toggling();
        let d = 1e-4;
        let fd = (tf.transform(d) - tf.transform(-d)) / (2.0 * d);
        let exact = tf.dc_slope();
        prop_assert!((fd - exact).norm() <= 1e-6 * exact.norm().max(1e-3 * s.total_duration().powi(2)));
    }

    #[test]
    fn toggling_flips_at_every_pulse(s in arb_schedule(25)) {
        let tf = s.toggling();
        prop_assert_eq!(tf.signs()[0], 1.0);
        prop_assert!(tf.signs().windows(2).all(|w| w[1] == -w[0]));
        prop_assert_eq!(&tf.breakpoints()[1..tf.breakpoints().len() - 1], s.pulse_times());
    }
}

#[test]
fn dc_slope_examples() {
    let echo = PulseSchedule::custom(1.0, vec![0.5]).unwrap().toggling();
    assert!((echo.dc_slope().norm() - PI / 2.0).abs() < 1e-12);
    let free = PulseSchedule::equidistant(0, 0.5).unwrap().toggling();
    assert!((free.dc_slope().norm() - PI).abs() < 1e-12);
}

#[test]
fn square_wave_fundamental() {
    let tf = PulseSchedule::equidistant(19, 100.0).unwrap().toggling();
    let t = tf.total_duration();
    let ratio = tf.transform(100.0).norm() / (2.0 / PI * t);
    assert!((ratio - 1.0).abs() < 0.02, "{ratio}");
}

fn brute_peak(s: &PulseSchedule, lo: f64, hi: f64) -> f64 {
    let tf = s.toggling();
    let steps = ((hi - lo) / 1e-3) as usize;
    (0..=steps)
        .map(|i| lo + (hi - lo) * i as f64 / steps as f64)
        .max_by(|a, b| tf.transform(*a).norm().total_cmp(&tf.transform(*b).norm()))
        .unwrap()
}

#[test]
fn peak_search_matches_fine_grid() {
    let cases = [
        (PulseSchedule::custom(1.0, vec![0.5]).unwrap(), 1e-3, 2.0),
        (PulseSchedule::uhrig(20, 0.0667).unwrap(), 50.0, 300.0),
        (PulseSchedule::equidistant(7, 100.0).unwrap(), 1.0, 200.0),
    ];
    for (s, lo, hi) in cases {
        let (f, m) = s.toggling().peak(lo, hi, 1.0).unwrap();
        let want = brute_peak(&s, lo, hi);
        assert!((f - want).abs() <= PEAK_REFINE_TOL_HZ, "{f} vs {want}");
        let best = s.toggling().transform(want).norm();
        assert!(m >= best * (1.0 - 1e-4), "{m} vs {best}");
    }
}

#[test]
fn equidistant_peak_approaches_modulation_frequency() {
    // The sinc envelope of the finite window pulls the maximum below
    // (n + 1) / 2T; the pull is a small fraction of the lobe width 1/T and
    // shrinks as n grows.
    let f_mod = 100.0;
    let mut last_shift = f64::INFINITY;
    for n in [3, 7, 11, 19] {
        let s = PulseSchedule::equidistant(n, f_mod).unwrap();
        let t = s.total_duration();
        let (f, _) = s.toggling().peak(1e-3, 2.0 * f_mod, 0.5).unwrap();
        let shift = (f - (n + 1) as f64 / (2.0 * t)).abs();
        assert!(shift <= 0.15 / t, "n = {n}: peak {f}");
        assert!(shift < last_shift);
        last_shift = shift;
    }
}

#[test]
fn uhrig_index_constant() {
    let s = PulseSchedule::uhrig(20, 0.0667).unwrap();
    let (f, m) = s.toggling().peak(50.0, 300.0, 0.5).unwrap();
    assert!((f - 109.6).abs() <= 1.0);
    let c = m / s.total_duration();
    assert!((0.40..=0.44).contains(&c), "{c}");
}

#[test]
fn parseval() {
    for s in [
        PulseSchedule::equidistant(7, 100.0).unwrap(),
        PulseSchedule::uhrig(12, 0.05).unwrap(),
        PulseSchedule::custom(0.02, vec![0.003, 0.011, 0.0125]).unwrap(),
    ] {
        let tf = s.toggling();
        let bp = tf.breakpoints();
        let tau_min = bp.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        let band = 50.0 / tau_min;
        let steps = 400_000;
        let df = 2.0 * band / steps as f64;
        let energy: f64 = (0..steps).map(|i| tf.transform(-band + (i as f64 + 0.5) * df).norm_sqr() * df).sum();
        let t = s.total_duration();
        assert!((energy / t - 1.0).abs() < 0.02, "{}", energy / t);
    }
}

#[test]
fn uhrig_matches_equidistant_length_in_scans() {
    for (n, f) in [(1, 50.0), (20, 150.0)] {
        let u = ModulationScheme::Uhrig.schedule(n, f).unwrap();
        let e = ModulationScheme::Equidistant.schedule(n, f).unwrap();
        assert_eq!(u.total_duration(), e.total_duration());
        assert_eq!(u.pulse_count(), n);
    }
}
