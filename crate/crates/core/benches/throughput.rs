//! Parallel versus single-threaded throughput of the sampling-heavy paths.
//!
//! The `sequential` variant runs inside a one-thread rayon pool; building with
//! `--no-default-features` removes rayon entirely and both variants then run
//! the sequential code.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qspec::coherence::{coherence_monte_carlo, simulate_fringe, uniform_phase_grid};
use qspec::estimate::{scan_coherence, Measurement};
use qspec::{
    DiscreteSpectrum, ModulationScheme, NoiseTone, PhaseMode, PulseSchedule, SamplingMode, SlowDrift, UnitsConfig,
};
use rayon::ThreadPool;

fn spectrum() -> DiscreteSpectrum {
    let u = UnitsConfig::default();
    let tones = [(50.0, 2.0), (100.0, 15.4), (150.0, 4.2), (200.0, 6.3)]
        .iter()
        .map(|&(f, b)| NoiseTone::from_field(b, f, PhaseMode::Random, &u).unwrap())
        .collect();
    DiscreteSpectrum::new(tones, Some(SlowDrift::new(66.0).unwrap())).unwrap()
}

fn pools() -> [(&'static str, ThreadPool); 2] {
    let build = |k| rayon::ThreadPoolBuilder::new().num_threads(k).build().unwrap();
    [("sequential", build(1)), ("parallel", build(0))]
}

fn monte_carlo(c: &mut Criterion) {
    let s = spectrum();
    let tf = PulseSchedule::equidistant(11, 100.0).unwrap().toggling();
    let mut group = c.benchmark_group("monte_carlo_1e5");
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                pool.install(|| coherence_monte_carlo(&s, &tf, 100_000, 1, SamplingMode::IndependentPhases).unwrap())
            })
        });
    }
    group.finish();
}

fn fringe(c: &mut Criterion) {
    let s = spectrum();
    let tf = PulseSchedule::equidistant(11, 100.0).unwrap().toggling();
    let grid = uniform_phase_grid(16);
    let mut group = c.benchmark_group("fringe_16x5000");
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                pool.install(|| simulate_fringe(&s, &tf, &grid, 5000, 1, SamplingMode::IndependentPhases).unwrap())
            })
        });
    }
    group.finish();
}

fn scan(c: &mut Criterion) {
    let s = spectrum();
    let freqs: Vec<f64> = (0..=60).map(|i| 40.0 + 3.0 * i as f64).collect();
    let n_values: Vec<usize> = (1..=19).step_by(2).collect();
    let mut group = c.benchmark_group("fringe_scan_61x10");
    group.sample_size(10);
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                pool.install(|| {
                    let m = Measurement::Fringe { shots: 100, phi_points: 16, seed: 1 };
                    scan_coherence(&s, ModulationScheme::Equidistant, &freqs, &n_values, m).unwrap()
                })
            })
        });
    }
    group.finish();
}

criterion_group!(benches, monte_carlo, fringe, scan);
criterion_main!(benches);
