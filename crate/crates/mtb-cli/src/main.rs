//! Reproduction front door: subcommands that regenerate duration sweeps,
//! minimum time-broadening designs, and energy-modulated link tables as
//! plot-ready CSV from declarative JSON configs.

mod commands;
mod config;
mod error;
mod waveform;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Parser)]
#[command(
    name = "mtb",
    version,
    about = "Minimum time-broadening pulses and energy-modulated fibre links: \
             soliton baselines, optimised designs, rates and spectral efficiencies \
             as plot-ready CSV"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON run configuration (see the configs/ directory for examples).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory; overrides the config's output_dir (default ".").
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Message-seed override for link evaluation.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Transmit and received durations of truncated solitons over energy
    SolitonSweep,
    /// Minimum time-broadening designs: one fixed point per energy
    MtbDesign,
    /// Energy-modulated link evaluation: rate, spectral efficiency, loopback
    EmEvaluate,
    /// Propagate a waveform file and emit the |q(t,z)|^2 surface
    Propagate {
        /// Waveform CSV (t_seconds,real,imag with a commented grid header).
        waveform: PathBuf,
    },
    /// Closed-form rate bound for M-ary soliton energy modulation
    Bound {
        /// Number of levels (a power of two, at least 2).
        m: u32,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot size the worker pool: {e}")))?;
    }
    let config_path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("missing required flag --config <PATH>".into()))?;
    let cfg = RunConfig::load(config_path)?;
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", out.display())))?;
    match cli.command {
        Command::SolitonSweep => commands::soliton_sweep(&cfg, &out),
        Command::MtbDesign => commands::mtb_design(&cfg, &out),
        Command::EmEvaluate => commands::em_evaluate(&cfg, &out, cli.seed),
        Command::Propagate { waveform } => commands::propagate(&cfg, &out, &waveform),
        Command::Bound { m } => commands::bound(&cfg, &out, m),
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
