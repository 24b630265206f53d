//! Run configuration: `[section]` headers, `key = value` lines, `#` comments.
//!
//! ```text
//! [units]
//! kappa = 17608000          # rad/s per gauss, optional
//!
//! [spectrum]
//! slow_drift_hz2 = 66       # optional
//!
//! [tone]                    # one section per tone
//! freq_hz = 100
//! amp = 15.3 uG             # or "269.4 rad_s"
//! phase = random            # or a locked offset in radians
//!
//! [scheme]
//! kind = equidistant        # or uhrig
//! n = 1..19                 # single value, a..b range, or comma list
//! f_mod = 100               # or f_range = start,stop,step, or T = seconds
//!
//! [measurement]
//! kind = fringe             # or analytic
//! shots = 500
//! phi_points = 16
//! seed = 7
//! common_period_s = 0.02    # required when any tone is phase-locked
//!
//! [output]
//! prefix = out/fig1
//! ```

use std::path::Path;

use qspec::{DiscreteSpectrum, ModulationScheme, NoiseTone, PhaseMode, SlowDrift, UnitsConfig};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Timing {
    FMod(f64),
    FRange(Vec<f64>),
    Duration(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeConfig {
    pub kind: ModulationScheme,
    pub n_values: Vec<usize>,
    pub timing: Timing,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeasurementConfig {
    Analytic,
    Fringe { shots: u32, phi_points: usize, seed: Option<u64> },
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub units: UnitsConfig,
    pub spectrum: DiscreteSpectrum,
    pub scheme: SchemeConfig,
    pub measurement: MeasurementConfig,
    pub common_period: Option<f64>,
    pub prefix: Option<String>,
}

#[derive(Debug, Clone, Copy)]
enum Section {
    Units,
    Spectrum,
    Tone,
    Scheme,
    Measurement,
    Output,
}

#[derive(Debug, Default)]
struct ToneDraft {
    line: usize,
    freq: Option<f64>,
    amp: Option<Amplitude>,
    phase: Option<PhaseMode>,
}

#[derive(Debug, Clone, Copy)]
enum Amplitude {
    MicroGauss(f64),
    RadPerSecond(f64),
}

#[derive(Debug, Default)]
struct Draft {
    kappa: Option<f64>,
    slow_drift: Option<f64>,
    tones: Vec<ToneDraft>,
    kind: Option<ModulationScheme>,
    n_values: Option<Vec<usize>>,
    timing: Vec<(&'static str, Timing)>,
    measurement: Option<String>,
    shots: Option<u32>,
    phi_points: Option<usize>,
    seed: Option<u64>,
    common_period: Option<f64>,
    prefix: Option<String>,
}

pub fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
    parse(&text).map_err(|e| match e {
        CliError::Input(msg) => CliError::Input(format!("{}:{msg}", path.display())),
        other => other,
    })
}

/// Parse config text; errors are prefixed with the offending line number.
pub fn parse(text: &str) -> Result<RunConfig, CliError> {
    let mut d = Draft::default();
    let mut section: Option<Section> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            section = Some(match name.trim() {
                "units" => Section::Units,
                "spectrum" => Section::Spectrum,
                "tone" => {
                    d.tones.push(ToneDraft { line, ..ToneDraft::default() });
                    Section::Tone
                }
                "scheme" => Section::Scheme,
                "measurement" => Section::Measurement,
                "output" => Section::Output,
                other => return Err(at(line, format!("unknown section [{other}]"))),
            });
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(at(line, format!("expected 'key = value', found '{content}'")));
        };
        let (key, value) = (key.trim(), value.trim());
        let Some(sec) = section else {
            return Err(at(line, format!("'{key}' appears before any [section]")));
        };
        assign(&mut d, sec, key, value).map_err(|msg| at(line, msg))?;
    }
    finish(d)
}

fn at(line: usize, msg: String) -> CliError {
    CliError::Input(format!("{line}: {msg}"))
}

fn number<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
    value.parse().map_err(|_| format!("{key}: cannot parse '{value}'"))
}

fn set<T>(slot: &mut Option<T>, key: &str, value: T) -> Result<(), String> {
    if slot.is_some() {
        return Err(format!("{key} given twice"));
    }
    *slot = Some(value);
    Ok(())
}

fn assign(d: &mut Draft, sec: Section, key: &str, value: &str) -> Result<(), String> {
    match (sec, key) {
        (Section::Units, "kappa") => set(&mut d.kappa, key, number(key, value)?),
        (Section::Spectrum, "slow_drift_hz2") => set(&mut d.slow_drift, key, number(key, value)?),
        (Section::Tone, "freq_hz") => {
            let v = number(key, value)?;
            set(&mut d.tones.last_mut().expect("inside [tone]").freq, key, v)
        }
        (Section::Tone, "amp") => {
            let amp = parse_amplitude(value)?;
            set(&mut d.tones.last_mut().expect("inside [tone]").amp, key, amp)
        }
        (Section::Tone, "phase") => {
            let phase = if value == "random" { PhaseMode::Random } else { PhaseMode::locked(number(key, value)?) };
            set(&mut d.tones.last_mut().expect("inside [tone]").phase, key, phase)
        }
        (Section::Scheme, "kind") => {
            let kind = value.parse().map_err(|_| format!("kind: expected equidistant or uhrig, found '{value}'"))?;
            set(&mut d.kind, key, kind)
        }
        (Section::Scheme, "n") => set(&mut d.n_values, key, parse_counts(value)?),
        (Section::Scheme, "f_mod") => {
            d.timing.push(("f_mod", Timing::FMod(number(key, value)?)));
            Ok(())
        }
        (Section::Scheme, "f_range") => {
            d.timing.push(("f_range", Timing::FRange(parse_range(value)?)));
            Ok(())
        }
        (Section::Scheme, "T") => {
            d.timing.push(("T", Timing::Duration(number(key, value)?)));
            Ok(())
        }
        (Section::Measurement, "kind") => set(&mut d.measurement, key, value.to_owned()),
        (Section::Measurement, "shots") => set(&mut d.shots, key, number(key, value)?),
        (Section::Measurement, "phi_points") => set(&mut d.phi_points, key, number(key, value)?),
        (Section::Measurement, "seed") => set(&mut d.seed, key, number(key, value)?),
        (Section::Measurement, "common_period_s") => set(&mut d.common_period, key, number(key, value)?),
        (Section::Output, "prefix") => set(&mut d.prefix, key, value.to_owned()),
        _ => Err(format!("unknown key '{key}' in this section")),
    }
}

fn parse_amplitude(value: &str) -> Result<Amplitude, String> {
    let mut parts = value.split_whitespace();
    let (Some(num), Some(unit), None) = (parts.next(), parts.next(), parts.next()) else {
        return Err(format!("amp: expected '<value> uG' or '<value> rad_s', found '{value}'"));
    };
    let v: f64 = number("amp", num)?;
    match unit {
        "uG" => Ok(Amplitude::MicroGauss(v)),
        "rad_s" => Ok(Amplitude::RadPerSecond(v)),
        other => Err(format!("amp: unknown unit '{other}' (use uG or rad_s)")),
    }
}

/// `7`, `1..19` (inclusive) or `1, 5, 9`.
pub fn parse_counts(value: &str) -> Result<Vec<usize>, String> {
    let out: Vec<usize> = if let Some((a, b)) = value.split_once("..") {
        let (a, b): (usize, usize) = (number("n", a.trim())?, number("n", b.trim())?);
        if a > b {
            return Err(format!("n: empty range {a}..{b}"));
        }
        (a..=b).collect()
    } else {
        value.split(',').map(|s| number("n", s.trim())).collect::<Result<_, _>>()?
    };
    if out.is_empty() || out.windows(2).any(|w| w[1] <= w[0]) {
        return Err(format!("n: values must be strictly increasing, found '{value}'"));
    }
    Ok(out)
}

/// `start, stop, step` with `stop` included when it falls on the grid.
pub fn parse_range(value: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<f64> = value.split(',').map(|s| number("range", s.trim())).collect::<Result<_, _>>()?;
    let [start, stop, step] = parts[..] else {
        return Err(format!("expected 'start, stop, step', found '{value}'"));
    };
    if !(step > 0.0) || !(stop >= start) {
        return Err(format!("empty or invalid range '{value}'"));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|i| start + step * i as f64).collect())
}

fn finish(d: Draft) -> Result<RunConfig, CliError> {
    let input = |msg: String| CliError::Input(msg);
    let units = match d.kappa {
        Some(k) => UnitsConfig::new(k).map_err(|e| input(format!("[units] kappa: {e}")))?,
        None => UnitsConfig::default(),
    };
    let mut tones = Vec::with_capacity(d.tones.len());
    for t in &d.tones {
        let missing = |k: &str| input(format!("{}: [tone] is missing '{k}'", t.line));
        let freq = t.freq.ok_or_else(|| missing("freq_hz"))?;
        let phase = t.phase.unwrap_or(PhaseMode::Random);
        let tone = match t.amp.ok_or_else(|| missing("amp"))? {
            Amplitude::MicroGauss(b) => NoiseTone::from_field(b, freq, phase, &units),
            Amplitude::RadPerSecond(n) => NoiseTone::new(n, freq, phase),
        }
        .map_err(|e| input(format!("{}: [tone] {e}", t.line)))?;
        tones.push(tone);
    }
    let drift =
        d.slow_drift.map(SlowDrift::new).transpose().map_err(|e| input(format!("[spectrum] slow_drift_hz2: {e}")))?;
    let spectrum = DiscreteSpectrum::new(tones, drift).map_err(|e| input(format!("[spectrum] {e}")))?;

    let kind = d.kind.ok_or_else(|| input("[scheme] kind is required".into()))?;
    let n_values = d.n_values.ok_or_else(|| input("[scheme] n is required".into()))?;
    let mut timing = d.timing;
    if timing.len() != 1 {
        let keys: Vec<&str> = timing.iter().map(|t| t.0).collect();
        return Err(input(format!("[scheme] needs exactly one of f_mod, f_range, T; found {keys:?}")));
    }
    let timing = timing.pop().expect("one timing").1;
    match &timing {
        Timing::FMod(f) | Timing::Duration(f) if !(*f > 0.0) => {
            return Err(input(format!("[scheme] f_mod/T must be positive, got {f}")))
        }
        Timing::FRange(r) if r[0] <= 0.0 => return Err(input("[scheme] f_range must start above 0 Hz".into())),
        _ => {}
    }
    if kind == ModulationScheme::Uhrig && n_values[0] == 0 {
        return Err(input("[scheme] Uhrig schedules need n >= 1".into()));
    }

    let measurement = match d.measurement.as_deref().unwrap_or("analytic") {
        "analytic" => MeasurementConfig::Analytic,
        "fringe" => MeasurementConfig::Fringe {
            shots: d.shots.ok_or_else(|| input("[measurement] fringe needs 'shots'".into()))?,
            phi_points: d.phi_points.unwrap_or(16),
            seed: d.seed,
        },
        other => return Err(input(format!("[measurement] kind: expected analytic or fringe, found '{other}'"))),
    };
    if let MeasurementConfig::Fringe { shots, phi_points, .. } = measurement {
        if shots == 0 || phi_points < 3 {
            return Err(input("[measurement] needs shots >= 1 and phi_points >= 3".into()));
        }
    }
    if let Some(p) = d.common_period {
        if !(p > 0.0) {
            return Err(input(format!("[measurement] common_period_s must be positive, got {p}")));
        }
    }
    Ok(RunConfig {
        units,
        spectrum,
        scheme: SchemeConfig { kind, n_values, timing },
        measurement,
        common_period: d.common_period,
        prefix: d.prefix,
    })
}
