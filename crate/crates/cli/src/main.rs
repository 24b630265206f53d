//! `qspec`: simulate, scan and characterise discrete dephasing noise.
//!
//! Exit codes: 0 success, 2 input error, 3 precondition not met (no zero
//! crossing), 4 fit did not converge or was ill-conditioned.

// `!(x > 0.0)` deliberately rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qspec::{ModulationScheme, UnitsConfig};

use commands::{CrbArgs, FilterArgs, FitArgs, IdentifyArgs};
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "qspec", version, about = "Single-qubit spectroscopy of strong discrete dephasing noise")]
struct Cli {
    /// Seed for fringe simulation; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output path prefix; overrides the config.
    #[arg(long, global = true)]
    out: Option<String>,

    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate Ramsey fringes for every schedule in the config and fit them.
    SimulateFringe { config: PathBuf },

    /// Coherence over f_mod x n, analytic or from simulated fringes.
    Scan { config: PathBuf },

    /// Stage 1: candidate tone frequencies from a scan.
    Identify {
        scan: PathBuf,
        /// Snap candidates to multiples of this base frequency (Hz).
        #[arg(long)]
        comb: Option<f64>,
        /// Minimum dip depth 1 - A.
        #[arg(long, default_value_t = qspec::estimate::DEFAULT_DIP_THRESHOLD)]
        threshold: f64,
        /// Merge radius in Hz (default 2/T of the largest-n row).
        #[arg(long)]
        merge_width: Option<f64>,
    },

    /// Stage 2: tone amplitude from the first zero crossing of A(n).
    ZeroCross {
        /// Scan CSV containing a column at --freq.
        series: PathBuf,
        #[arg(long)]
        freq: f64,
        #[arg(long, default_value = "equidistant")]
        scheme: ModulationScheme,
        /// rad/s per gauss.
        #[arg(long)]
        kappa: Option<f64>,
    },

    /// Stage 3: least-squares fit of tone amplitudes to a scan.
    Fit {
        data: PathBuf,
        /// Comma-separated tone frequencies in Hz.
        #[arg(long)]
        tones: String,
        /// Also fit the slow-drift product, starting from this value (Hz^2).
        #[arg(long, num_args = 0..=1, default_missing_value = "10")]
        slow_drift: Option<f64>,
        /// CSV with freq_hz,amp_ug starting values.
        #[arg(long)]
        init: Option<PathBuf>,
        #[arg(long, default_value = "equidistant")]
        scheme: ModulationScheme,
        /// rad/s per gauss.
        #[arg(long)]
        kappa: Option<f64>,
    },

    /// Filter transform |F_T(f)| of one schedule and its peak.
    Filter {
        #[arg(long, default_value = "equidistant")]
        scheme: ModulationScheme,
        #[arg(long)]
        n: usize,
        /// Sequence length in seconds.
        #[arg(long = "T")]
        duration: Option<f64>,
        /// Modulation frequency; sets T = (n + 1) / (2 f_mod).
        #[arg(long)]
        f_mod: Option<f64>,
        /// start,stop,step in Hz.
        #[arg(long)]
        f_range: Option<String>,
    },

    /// Cramer-Rao bounds on a single tone's amplitude and frequency.
    Crb {
        /// lo,hi,count of noise indices, evenly spaced.
        #[arg(long)]
        eta_range: String,
        #[arg(long, default_value = "equidistant")]
        scheme: ModulationScheme,
        #[arg(long, default_value_t = 100)]
        shots: u32,
        #[arg(long, default_value_t = 100.0)]
        f0: f64,
        #[arg(long, default_value_t = 11)]
        n: usize,
    },
}

fn units(kappa: Option<f64>) -> Result<UnitsConfig, CliError> {
    match kappa {
        Some(k) => UnitsConfig::new(k).map_err(|e| CliError::Input(format!("--kappa: {e}"))),
        None => Ok(UnitsConfig::default()),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(k) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| CliError::Input(format!("--threads: {e}")))?;
    }
    let out = cli.out.as_deref();
    let fallback = commands::default_prefix();
    match cli.command {
        Command::SimulateFringe { config } => {
            let cfg = config::load(&config)?;
            commands::simulate_fringe_cmd(&cfg, cli.seed, &commands::prefix(out, cfg.prefix.as_deref(), fallback))
        }
        Command::Scan { config } => {
            let cfg = config::load(&config)?;
            commands::scan_cmd(&cfg, cli.seed, &commands::prefix(out, cfg.prefix.as_deref(), fallback))
        }
        Command::Identify { scan, comb, threshold, merge_width } => {
            let prefix = commands::prefix(out, None, &commands::stem_prefix(&scan));
            commands::identify_cmd(&scan, &IdentifyArgs { comb, threshold, merge_width }, &prefix)
        }
        Command::ZeroCross { series, freq, scheme, kappa } => {
            commands::zero_cross_cmd(&series, freq, scheme, &units(kappa)?)
        }
        Command::Fit { data, tones, slow_drift, init, scheme, kappa } => {
            let prefix = commands::prefix(out, None, &commands::stem_prefix(&data));
            let args = FitArgs { tones: commands::parse_tones(&tones)?, slow_drift, init, scheme };
            commands::fit_cmd(&data, &args, &units(kappa)?, &prefix)
        }
        Command::Filter { scheme, n, duration, f_mod, f_range } => {
            let args = FilterArgs { scheme, n, duration, f_mod, f_range };
            commands::filter_cmd(&args, &commands::prefix(out, None, fallback))
        }
        Command::Crb { eta_range, scheme, shots, f0, n } => {
            commands::crb_cmd(&CrbArgs { eta_range, scheme, shots, f0, n }, &commands::prefix(out, None, fallback))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
