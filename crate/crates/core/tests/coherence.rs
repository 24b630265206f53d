mod common;

use std::f64::consts::{PI, TAU};

use proptest::prelude::*;
use qspec::bessel::{bessel_j0, J0_FIRST_ZERO};
use qspec::coherence::{
    coherence_mixing, coherence_monte_carlo, coherence_product, phase_integral, simulate_fringe, uniform_phase_grid,
    weak_coherence,
};
use qspec::estimate::fit_fringe;
use qspec::rng::substream;
use qspec::{DiscreteSpectrum, ModulationScheme, NoiseTone, PhaseMode, PulseSchedule, SamplingMode, TogglingFunction};
use rand::Rng;

use common::{arb_schedule, toggled_integral};

fn tone_with_argument(tf: &TogglingFunction, f: f64, x: f64, phase: PhaseMode) -> NoiseTone {
    NoiseTone::new(x / tf.transform(f).norm(), f, phase).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn phase_integral_matches_quadrature(
        s in arb_schedule(25),
        tones in proptest::collection::vec((0.0f64..300.0, 0.0f64..500.0, 0.0f64..TAU), 3),
    ) {
        prop_assume!((tones[0].0 - tones[1].0).abs() > 1e-6 && (tones[1].0 - tones[2].0).abs() > 1e-6 && (tones[0].0 - tones[2].0).abs() > 1e-6);
        let spectrum = DiscreteSpectrum::new(
            tones.iter().map(|&(f, n, _)| NoiseTone::new(n, f, PhaseMode::Random).unwrap()).collect(),
            None,
        ).unwrap();
        let phases: Vec<f64> = tones.iter().map(|t| t.2).collect();
        let exact = phase_integral(&spectrum, &phases, &s.toggling()).unwrap();
        let f_max = tones.iter().map(|t| t.0).fold(1.0, f64::max);
        let quad = toggled_integral(&s, &|t| spectrum.sample(&phases, t).unwrap(), 0.1 / f_max, 1e-14);
        // relative to the largest possible phase, sum N_k T
        let scale = tones.iter().map(|t| t.1).sum::<f64>() * s.total_duration();
        prop_assert!((exact - quad).abs() <= 1e-8 * scale.max(1e-12), "{} vs {}", exact, quad);
    }

    #[test]
    fn weak_limit_for_small_arguments(
        s in arb_schedule(12),
        xs in proptest::collection::vec((1.0f64..300.0, 0.0f64..1.0), 1..=4),
    ) {
        let tf = s.toggling();
        let mut tones = Vec::new();
        for &(f, _) in &xs {
            if tf.transform(f).norm() < 1e-6 * s.total_duration() || tones.iter().any(|&g: &f64| (g - f).abs() < 1e-6) {
                return Ok(());
            }
            tones.push(f);
        }
        let x_max = xs.iter().map(|x| x.1).fold(1e-9, f64::max);
        let spectrum = DiscreteSpectrum::new(
            xs.iter().map(|&(f, x)| tone_with_argument(&tf, f, 0.2 * x / x_max, PhaseMode::Random)).collect(),
            None,
        ).unwrap();
        let exact = coherence_product(&spectrum, &tf).unwrap().value;
        let weak = weak_coherence(&spectrum, &tf).unwrap().value;
        prop_assert!((exact - weak).abs() <= 1e-3);
        // -ln A_weak adds up over tones
        let parts: f64 = spectrum.tones().iter().map(|t| {
            let one = DiscreteSpectrum::new(vec![*t], None).unwrap();
            -weak_coherence(&one, &tf).unwrap().value.ln()
        }).sum();
        prop_assert!((parts + weak.ln()).abs() <= 1e-12 * parts.max(1.0));
    }
}

#[test]
fn weak_limit_single_tone() {
    let tf = PulseSchedule::equidistant(3, 80.0).unwrap().toggling();
    let s = DiscreteSpectrum::new(vec![tone_with_argument(&tf, 80.0, 0.1, PhaseMode::Random)], None).unwrap();
    let weak = weak_coherence(&s, &tf).unwrap().value;
    assert!((weak - 0.997_503_122).abs() < 1e-8);
    assert!((weak - bessel_j0(0.1)).abs() < 1e-5);
}

#[test]
fn product_matches_monte_carlo() {
    let mut rng = substream(11, 0);
    for case in 0..10 {
        let n = rng.random_range(1..=15);
        let tf = ModulationScheme::Equidistant.schedule(n, rng.random_range(30.0..200.0)).unwrap().toggling();
        let d = rng.random_range(1..=4);
        let mut tones = Vec::new();
        while tones.len() < d {
            let f = rng.random_range(10.0..300.0);
            if tf.transform(f).norm() > 1e-3 * tf.total_duration() {
                tones.push(tone_with_argument(&tf, f, rng.random_range(0.0..12.0), PhaseMode::Random));
            }
        }
        let s = DiscreteSpectrum::new(tones, None).unwrap();
        let exact = coherence_product(&s, &tf).unwrap().value;
        let mc = coherence_monte_carlo(&s, &tf, 100_000, case, SamplingMode::IndependentPhases).unwrap();
        let err = mc.coherence.stderr.unwrap();
        assert!((exact - mc.coherence.value).abs() <= 4.0 * err, "case {case}: {exact} vs {:?}", mc.coherence);
        assert!(mc.imaginary.abs() <= 4.0 * mc.imaginary_stderr, "case {case}: imaginary {}", mc.imaginary);
    }
}

#[test]
fn single_tone_at_first_zero() {
    let tf = PulseSchedule::equidistant(5, 120.0).unwrap().toggling();
    let s =
        DiscreteSpectrum::new(vec![tone_with_argument(&tf, 120.0, J0_FIRST_ZERO, PhaseMode::Random)], None).unwrap();
    assert!(coherence_product(&s, &tf).unwrap().value.abs() < 1e-6);
    let fit = fit_fringe(
        &simulate_fringe(&s, &tf, &uniform_phase_grid(16), 500, 5, SamplingMode::IndependentPhases).unwrap(),
    )
    .unwrap();
    assert!(fit.coherence.abs() <= 3.0 * fit.sigma, "{fit:?}");
}

#[test]
fn mixing_without_resonances_is_the_product() {
    let tf = PulseSchedule::equidistant(7, 90.0).unwrap().toggling();
    let locked = DiscreteSpectrum::new(
        vec![
            tone_with_argument(&tf, 90.0, 3.1, PhaseMode::locked(0.3)),
            tone_with_argument(&tf, 90.0 * 2f64.sqrt(), 1.7, PhaseMode::locked(2.0)),
        ],
        None,
    )
    .unwrap();
    let random = DiscreteSpectrum::new(
        locked
            .tones()
            .iter()
            .map(|t| NoiseTone::new(t.amplitude(), t.frequency(), PhaseMode::Random).unwrap())
            .collect(),
        None,
    )
    .unwrap();
    let mixed = coherence_mixing(&locked, &tf, 6, 1e-6).unwrap().value;
    assert!((mixed - coherence_product(&random, &tf).unwrap().value).abs() < 1e-12);

    // a single tone only ever resonates with itself through h = 0
    let one = DiscreteSpectrum::new(vec![locked.tones()[0]], None).unwrap();
    assert!((coherence_mixing(&one, &tf, 1, 1e-6).unwrap().value - bessel_j0(3.1)).abs() < 1e-14);
    assert!(coherence_product(&one, &tf).is_err());
}

#[test]
fn mixing_matches_common_origin_monte_carlo() {
    let tf = PulseSchedule::equidistant(3, 70.0).unwrap().toggling();
    for (k, rel) in [0.0, PI / 4.0, PI / 2.0, 3.0 * PI / 4.0].into_iter().enumerate() {
        let s = DiscreteSpectrum::new(
            vec![
                tone_with_argument(&tf, 50.0, 4.0, PhaseMode::locked(0.0)),
                tone_with_argument(&tf, 100.0, 2.5, PhaseMode::locked(rel)),
            ],
            None,
        )
        .unwrap();
        let mixed = coherence_mixing(&s, &tf, 6, 1e-6).unwrap().value;
        let mc =
            coherence_monte_carlo(&s, &tf, 100_000, k as u64, SamplingMode::CommonTimeOrigin { period: 0.02 }).unwrap();
        assert!(
            (mixed - mc.coherence.value).abs() <= 4.0 * mc.coherence.stderr.unwrap(),
            "{rel}: {mixed} vs {:?}",
            mc.coherence
        );
    }
}

#[test]
fn empty_spectrum_fringe_is_ideal() {
    let tf = PulseSchedule::equidistant(3, 70.0).unwrap().toggling();
    let shots = 100_000;
    let scan = simulate_fringe(
        &DiscreteSpectrum::empty(),
        &tf,
        &uniform_phase_grid(8),
        shots,
        1,
        SamplingMode::IndependentPhases,
    )
    .unwrap();
    for p in scan.points() {
        let want = 0.5 - 0.5 * p.phi_rf.cos();
        let err = (want * (1.0 - want) / shots as f64).sqrt();
        assert!((p.p_up - want).abs() <= 4.0 * err + 1e-12, "{p:?}");
    }
    let mc = coherence_monte_carlo(&DiscreteSpectrum::empty(), &tf, 500, 1, SamplingMode::IndependentPhases).unwrap();
    assert_eq!(mc.coherence.value, 1.0);
    assert_eq!(mc.coherence.stderr, Some(0.0));
}

#[test]
fn fringe_round_trip() {
    let mut rng = substream(12, 0);
    let grid = uniform_phase_grid(16);
    let mut outside = 0;
    for case in 0..100 {
        let n = rng.random_range(1..=15);
        let tf = ModulationScheme::Equidistant.schedule(n, rng.random_range(30.0..200.0)).unwrap().toggling();
        let f = rng.random_range(10.0..300.0);
        if tf.transform(f).norm() < 1e-3 * tf.total_duration() {
            continue;
        }
        let s = DiscreteSpectrum::new(
            vec![tone_with_argument(&tf, f, rng.random_range(0.0..8.0), PhaseMode::Random)],
            None,
        )
        .unwrap();
        let exact = coherence_product(&s, &tf).unwrap().value;
        let fit =
            fit_fringe(&simulate_fringe(&s, &tf, &grid, 500, case, SamplingMode::IndependentPhases).unwrap()).unwrap();
        if (fit.coherence - exact).abs() > 4.0 * fit.sigma {
            outside += 1;
        }
    }
    assert_eq!(outside, 0);
}

#[test]
fn seeded_runs_repeat_and_ignore_thread_count() {
    let tf = PulseSchedule::equidistant(11, 100.0).unwrap().toggling();
    let s = DiscreteSpectrum::new(
        vec![
            tone_with_argument(&tf, 100.0, 3.0, PhaseMode::Random),
            tone_with_argument(&tf, 150.0, 1.0, PhaseMode::Random),
        ],
        None,
    )
    .unwrap();
    let run = || {
        (
            coherence_monte_carlo(&s, &tf, 20_000, 3, SamplingMode::IndependentPhases).unwrap(),
            simulate_fringe(&s, &tf, &uniform_phase_grid(12), 200, 3, SamplingMode::IndependentPhases).unwrap(),
        )
    };
    let pool = |k| rayon::ThreadPoolBuilder::new().num_threads(k).build().unwrap();
    let one = pool(1).install(run);
    let four = pool(4).install(run);
    assert_eq!(one, four);
    assert_eq!(one.0.coherence.value.to_bits(), four.0.coherence.value.to_bits());
    let other = coherence_monte_carlo(&s, &tf, 20_000, 4, SamplingMode::IndependentPhases).unwrap();
    assert_ne!(other.coherence.value, one.0.coherence.value);
}
