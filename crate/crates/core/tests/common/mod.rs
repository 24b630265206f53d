#![allow(dead_code)]

use proptest::prelude::*;
use qspec::PulseSchedule;

/// Adaptive Simpson quadrature.
pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rule(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = rule(fa, flm, fm, a, m);
        let right = rule(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    recurse(f, a, b, fa, fm, fb, rule(fa, fm, fb, a, b), tol, 40)
}

/// Integral of `g(t) F(t)` over `[0, T]`, split at the pulses and into
/// pieces no longer than `max_piece` so the adaptive rule cannot be fooled by
/// an oscillating integrand.
pub fn toggled_integral(schedule: &PulseSchedule, g: &dyn Fn(f64) -> f64, max_piece: f64, tol: f64) -> f64 {
    schedule
        .toggling()
        .intervals()
        .map(|(a, b, s)| {
            let pieces = ((b - a) / max_piece).ceil().max(1.0) as usize;
            let h = (b - a) / pieces as f64;
            s * (0..pieces).map(|i| simpson(g, a + i as f64 * h, a + (i + 1) as f64 * h, tol)).sum::<f64>()
        })
        .sum()
}

/// Custom schedule with up to `max_pulses` random pulses.
pub fn arb_schedule(max_pulses: usize) -> impl Strategy<Value = PulseSchedule> {
    (0.01f64..0.5, proptest::collection::vec(0.001f64..0.999, 0..=max_pulses)).prop_filter_map(
        "pulses too close",
        |(t, mut u)| {
            u.sort_by(f64::total_cmp);
            if u.windows(2).any(|w| w[1] - w[0] < 1e-4) {
                return None;
            }
            PulseSchedule::custom(t, u.into_iter().map(|x| x * t).collect()).ok()
        },
    )
}
