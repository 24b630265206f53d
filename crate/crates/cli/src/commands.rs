use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use qspec::coherence::{
    coherence_mixing, coherence_product, simulate_fringe, uniform_phase_grid, DEFAULT_MIXING_ORDER,
    DEFAULT_RESONANCE_TOL_HZ,
};
use qspec::estimate::crb::eta_sweep;
use qspec::estimate::{
    fine_tune_fit, fit_fringe, identify_peaks, magnitude_by_zero_crossing, scan_coherence, CrbDesign, FitOptions,
    Measurement, PeakMode, PeakOptions, ScanGrid,
};
use qspec::io;
use qspec::rng::derive_seed;
use qspec::{DiscreteSpectrum, ModulationScheme, PulseSchedule, SamplingMode, TogglingFunction, UnitsConfig};

use crate::config::{parse_range, MeasurementConfig, RunConfig, Timing};
use crate::error::CliError;

const DEFAULT_PREFIX: &str = "qspec";

/// Output prefix: `--out`, then the config, then the fallback.
pub fn prefix(flag: Option<&str>, config: Option<&str>, fallback: &str) -> String {
    flag.or(config).unwrap_or(fallback).to_owned()
}

/// Input path without a trailing `.csv`, used as the default prefix for
/// commands that read a file.
pub fn stem_prefix(path: &Path) -> String {
    let s = path.to_string_lossy();
    s.strip_suffix(".csv").unwrap_or(&s).to_owned()
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Input(format!("cannot create directory {}: {e}", dir.display())))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

fn open(path: &Path) -> Result<File, CliError> {
    File::open(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

fn output(prefix: &str, suffix: &str) -> PathBuf {
    PathBuf::from(format!("{prefix}_{suffix}"))
}

fn read_grid(path: &Path) -> Result<ScanGrid, CliError> {
    io::read_scan(open(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn has_locked(spectrum: &DiscreteSpectrum) -> bool {
    spectrum.tones().iter().any(|t| t.is_locked())
}

fn sampling_mode(cfg: &RunConfig) -> Result<SamplingMode, CliError> {
    match (has_locked(&cfg.spectrum), cfg.common_period) {
        (true, Some(period)) => Ok(SamplingMode::CommonTimeOrigin { period }),
        (true, None) => Err(CliError::Input("phase-locked tones need [measurement] common_period_s".into())),
        (false, _) => Ok(SamplingMode::IndependentPhases),
    }
}

fn describe(cfg: &RunConfig) {
    for t in cfg.spectrum.tones() {
        println!(
            "tone {} Hz: {:.4} uG = {:.4} rad/s{}",
            t.frequency(),
            t.field_microgauss(&cfg.units),
            t.amplitude(),
            if t.is_locked() { " (locked)" } else { "" }
        );
    }
    if cfg.spectrum.slow_drift_hz2() > 0.0 {
        println!("slow drift: {} Hz^2", cfg.spectrum.slow_drift_hz2());
    }
}

/// Exact model coherence. Random-phase tones average out independently of
/// the locked ones, so their Bessel factors multiply the mixing sum.
fn model_coherence(spectrum: &DiscreteSpectrum, tf: &TogglingFunction) -> Result<f64, CliError> {
    if !has_locked(spectrum) {
        return Ok(coherence_product(spectrum, tf)?.value);
    }
    let (locked, random): (Vec<_>, Vec<_>) = spectrum.tones().iter().copied().partition(|t| t.is_locked());
    let locked = DiscreteSpectrum::new(locked, spectrum.slow_drift())?;
    let random = DiscreteSpectrum::new(random, None)?;
    let mixed = coherence_mixing(&locked, tf, DEFAULT_MIXING_ORDER, DEFAULT_RESONANCE_TOL_HZ)?.value;
    Ok(mixed * coherence_product(&random, tf)?.value)
}

fn build_schedule(scheme: ModulationScheme, n: usize, duration: f64) -> Result<PulseSchedule, CliError> {
    Ok(match scheme {
        ModulationScheme::Equidistant => PulseSchedule::equidistant_with_duration(n, duration)?,
        ModulationScheme::Uhrig => PulseSchedule::uhrig(n, duration)?,
    })
}

pub fn simulate_fringe_cmd(cfg: &RunConfig, seed_flag: Option<u64>, prefix: &str) -> Result<(), CliError> {
    let MeasurementConfig::Fringe { shots, phi_points, seed } = cfg.measurement else {
        return Err(CliError::Input("simulate-fringe needs [measurement] kind = fringe".into()));
    };
    let seed = seed_flag
        .or(seed)
        .ok_or_else(|| CliError::Input("fringe simulation needs a seed ([measurement] seed or --seed)".into()))?;
    let mode = sampling_mode(cfg)?;
    let scheme = cfg.scheme.kind;
    describe(cfg);

    // (label, schedule) for every requested setting
    let mut runs = Vec::new();
    for &n in &cfg.scheme.n_values {
        match &cfg.scheme.timing {
            Timing::Duration(t) => runs.push((format!("n{n}_T{t}"), build_schedule(scheme, n, *t)?)),
            Timing::FMod(f) => runs.push((format!("n{n}_f{f}"), scheme.schedule(n, *f)?)),
            Timing::FRange(fs) => {
                for f in fs {
                    runs.push((format!("n{n}_f{f}"), scheme.schedule(n, *f)?));
                }
            }
        }
    }
    let grid = uniform_phase_grid(phi_points);
    let single = runs.len() == 1;
    for (i, (label, schedule)) in runs.iter().enumerate() {
        let tf = schedule.toggling();
        let scan = simulate_fringe(&cfg.spectrum, &tf, &grid, shots, derive_seed(seed, i as u64), mode)?;
        let fit = fit_fringe(&scan)?;
        let model = model_coherence(&cfg.spectrum, &tf)?;
        let path = if single { output(prefix, "fringe.csv") } else { output(prefix, &format!("{label}_fringe.csv")) };
        io::write_fringe(create(&path)?, &scan)?;
        println!(
            "n = {}, T = {} s: A = {:.4} +- {:.4} (model {:.4}) -> {}",
            schedule.pulse_count(),
            schedule.total_duration(),
            fit.coherence,
            fit.sigma,
            model,
            path.display()
        );
    }
    Ok(())
}

pub fn scan_cmd(cfg: &RunConfig, seed_flag: Option<u64>, prefix: &str) -> Result<(), CliError> {
    let freqs = match &cfg.scheme.timing {
        Timing::FMod(f) => vec![*f],
        Timing::FRange(fs) => fs.clone(),
        Timing::Duration(_) => return Err(CliError::Input("scan needs [scheme] f_mod or f_range, not T".into())),
    };
    let measurement = match cfg.measurement {
        MeasurementConfig::Analytic => Measurement::Analytic,
        MeasurementConfig::Fringe { shots, phi_points, seed } => Measurement::Fringe {
            shots,
            phi_points,
            seed: seed_flag
                .or(seed)
                .ok_or_else(|| CliError::Input("fringe scans need a seed ([measurement] seed or --seed)".into()))?,
        },
    };
    if has_locked(&cfg.spectrum) {
        return Err(CliError::Input("scan supports random-phase tones only".into()));
    }
    describe(cfg);
    let grid = scan_coherence(&cfg.spectrum, cfg.scheme.kind, &freqs, &cfg.scheme.n_values, measurement)?;
    let path = output(prefix, "scan.csv");
    io::write_scan(create(&path)?, &grid)?;
    println!("{} x {} cells -> {}", grid.n_values().len(), grid.freqs().len(), path.display());
    Ok(())
}

pub struct IdentifyArgs {
    pub comb: Option<f64>,
    pub threshold: f64,
    pub merge_width: Option<f64>,
}

pub fn identify_cmd(scan: &Path, args: &IdentifyArgs, prefix: &str) -> Result<(), CliError> {
    let grid = read_grid(scan)?;
    let mode = match args.comb {
        Some(base) if base > 0.0 => PeakMode::Comb { base },
        Some(base) => return Err(CliError::Input(format!("--comb must be positive, got {base}"))),
        None => PeakMode::Free,
    };
    if !(args.threshold > 0.0 && args.threshold <= 2.0) {
        return Err(CliError::Input(format!("--threshold must lie in (0, 2], got {}", args.threshold)));
    }
    let opts = PeakOptions { mode, dip_threshold: args.threshold, merge_width: args.merge_width };
    let found = identify_peaks(&grid, &opts);
    let path = output(prefix, "candidates.csv");
    io::write_candidates(create(&path)?, &found)?;
    for c in &found {
        println!("{} Hz: depth {:.3}, first seen at n = {}", c.frequency, c.dip_depth, c.first_n_detected);
    }
    println!("{} candidate(s) -> {}", found.len(), path.display());
    Ok(())
}

fn column_at(grid: &ScanGrid, freq: f64) -> Option<usize> {
    grid.freqs().iter().position(|&f| (f - freq).abs() <= 1e-6 * freq.abs().max(1.0))
}

pub fn zero_cross_cmd(series: &Path, freq: f64, scheme: ModulationScheme, units: &UnitsConfig) -> Result<(), CliError> {
    let grid = read_grid(series)?;
    let col = column_at(&grid, freq).ok_or_else(|| {
        CliError::Input(format!("{}: no column at {freq} Hz (available: {:?})", series.display(), grid.freqs()))
    })?;
    let z = magnitude_by_zero_crossing(&grid.column_series(col), freq, scheme, units)?;
    println!("amplitude_ug = {}", z.amplitude_ug);
    println!("amplitude_rad_s = {}", z.amplitude_rad_s);
    println!("crossing_T_s = {}", z.crossing_duration);
    println!("filter_magnitude_s = {}", z.filter_magnitude);
    println!("eta = {}", z.eta);
    Ok(())
}

pub fn parse_tones(list: &str) -> Result<Vec<f64>, CliError> {
    let tones: Vec<f64> = list
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| CliError::Input(format!("--tones: cannot parse '{s}'"))))
        .collect::<Result<_, _>>()?;
    if tones.is_empty() {
        return Err(CliError::Input("--tones needs at least one frequency".into()));
    }
    if let Some(f) = tones.iter().find(|f| !(**f > 0.0 && f.is_finite())) {
        return Err(CliError::Input(format!("--tones: frequencies must be positive, got {f}")));
    }
    for (i, a) in tones.iter().enumerate() {
        if tones[..i].iter().any(|b| (a - b).abs() <= 1e-9 * a) {
            return Err(CliError::Input(format!("--tones: {a} Hz listed twice")));
        }
    }
    Ok(tones)
}

pub struct FitArgs {
    pub tones: Vec<f64>,
    pub slow_drift: Option<f64>,
    pub init: Option<PathBuf>,
    pub scheme: ModulationScheme,
}

/// Starting amplitudes: from the init file when given, else the zero
/// crossing of each tone's column, else 1 uG.
fn initial_amplitudes(grid: &ScanGrid, args: &FitArgs, units: &UnitsConfig) -> Result<Vec<f64>, CliError> {
    if let Some(path) = &args.init {
        let pairs =
            io::read_amplitudes(open(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        return args
            .tones
            .iter()
            .map(|&f| {
                pairs
                    .iter()
                    .find(|p| (p.0 - f).abs() <= 1e-6 * f.max(1.0))
                    .map(|p| p.1)
                    .ok_or_else(|| CliError::Input(format!("{}: no initial amplitude for {f} Hz", path.display())))
            })
            .collect();
    }
    Ok(args
        .tones
        .iter()
        .map(|&f| {
            column_at(grid, f)
                .and_then(|col| magnitude_by_zero_crossing(&grid.column_series(col), f, args.scheme, units).ok())
                .map_or(1.0, |z| z.amplitude_ug)
        })
        .collect())
}

pub fn fit_cmd(data: &Path, args: &FitArgs, units: &UnitsConfig, prefix: &str) -> Result<(), CliError> {
    let grid = read_grid(data)?;
    let init = initial_amplitudes(&grid, args, units)?;
    let report = fine_tune_fit(
        &grid.fit_points(),
        args.scheme,
        &args.tones,
        &init,
        args.slow_drift,
        units,
        &FitOptions::default(),
    )?;
    let csv_path = output(prefix, "report.csv");
    io::write_report(create(&csv_path)?, &report)?;
    let summary = io::report_summary(&report);
    let txt_path = output(prefix, "report.txt");
    let mut txt = create(&txt_path)?;
    txt.write_all(summary.as_bytes())?;
    txt.flush()?;
    print!("{summary}");
    println!("-> {}, {}", csv_path.display(), txt_path.display());
    if !report.converged {
        return Err(CliError::NotConverged(format!(
            "fit did not converge after {} iterations (gradient {:e})",
            report.iterations, report.gradient_norm
        )));
    }
    Ok(())
}

pub struct FilterArgs {
    pub scheme: ModulationScheme,
    pub n: usize,
    pub duration: Option<f64>,
    pub f_mod: Option<f64>,
    pub f_range: Option<String>,
}

pub fn filter_cmd(args: &FilterArgs, prefix: &str) -> Result<(), CliError> {
    let duration = match (args.duration, args.f_mod) {
        (Some(t), None) => t,
        (None, Some(f)) if f > 0.0 => ModulationScheme::duration(args.n, f),
        (None, Some(f)) => return Err(CliError::Input(format!("--f-mod must be positive, got {f}"))),
        _ => return Err(CliError::Input("give exactly one of --T and --f-mod".into())),
    };
    if !(duration > 0.0) {
        return Err(CliError::Input(format!("--T must be positive, got {duration}")));
    }
    let schedule = build_schedule(args.scheme, args.n, duration)?;
    let tf = schedule.toggling();
    let grid = match &args.f_range {
        Some(r) => parse_range(r).map_err(|e| CliError::Input(format!("--f-range: {e}")))?,
        None => {
            let hi = (3.0 * (args.n + 1) as f64 / (2.0 * duration)).max(10.0 / duration);
            let step = 0.02 / duration;
            (0..=(hi / step).round() as usize).map(|i| i as f64 * step).collect()
        }
    };
    if grid.len() < 2 {
        return Err(CliError::Input("--f-range must contain at least two frequencies".into()));
    }
    let samples: Vec<(f64, f64)> = grid.iter().map(|&f| (f, tf.transform(f).norm())).collect();
    let (lo, hi) = (grid[0], grid[grid.len() - 1]);
    let (f_peak, mag) = tf.peak(lo, hi, grid[1] - grid[0])?;

    let filter_path = output(prefix, "filter.csv");
    io::write_filter(create(&filter_path)?, &samples)?;
    let schedule_path = output(prefix, "schedule.csv");
    io::write_schedule(create(&schedule_path)?, &schedule)?;
    println!("T = {duration} s, n = {}", args.n);
    println!("f_peak_hz = {f_peak}");
    println!("abs_FT_peak_s = {mag}");
    println!("ratio_FT_over_T = {}", mag / duration);
    println!("-> {}, {}", filter_path.display(), schedule_path.display());
    Ok(())
}

pub struct CrbArgs {
    pub eta_range: String,
    pub scheme: ModulationScheme,
    pub shots: u32,
    pub f0: f64,
    pub n: usize,
}

pub fn crb_cmd(args: &CrbArgs, prefix: &str) -> Result<(), CliError> {
    let parts: Vec<&str> = args.eta_range.split(',').map(str::trim).collect();
    let bad = || CliError::Input(format!("--eta-range: expected 'lo,hi,count', found '{}'", args.eta_range));
    let [lo, hi, count] = parts[..] else { return Err(bad()) };
    let (lo, hi): (f64, f64) = (lo.parse().map_err(|_| bad())?, hi.parse().map_err(|_| bad())?);
    let count: usize = count.parse().map_err(|_| bad())?;
    if !(lo > 0.0 && hi >= lo) || count == 0 || (count == 1 && hi != lo) {
        return Err(bad());
    }
    if args.shots == 0 || !(args.f0 > 0.0) {
        return Err(CliError::Input("--shots and --f0 must be positive".into()));
    }
    let etas: Vec<f64> =
        (0..count).map(|i| if count == 1 { lo } else { lo + (hi - lo) * i as f64 / (count - 1) as f64 }).collect();
    let design = CrbDesign::detuning_sweep(args.scheme, args.n, args.f0, 41, 1.0, args.shots, 16);
    let rows: Vec<(f64, f64, f64)> = eta_sweep(&etas, args.f0, &design)?
        .into_iter()
        .map(|(eta, r)| (eta, r.sigma_amplitude, r.sigma_frequency))
        .collect();
    let path = output(prefix, "crb.csv");
    io::write_crb(create(&path)?, &rows)?;
    for (eta, sn, sf) in &rows {
        println!("eta = {eta:.4}: sigma_N >= {sn:.4e} rad/s, sigma_f >= {sf:.4e} Hz");
    }
    println!("-> {}", path.display());
    Ok(())
}

pub fn default_prefix() -> &'static str {
    DEFAULT_PREFIX
}
