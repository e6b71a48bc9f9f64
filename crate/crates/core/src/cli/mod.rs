//! Command-line driver: config resolution, the four subcommands and their
//! CSV artifacts.

mod bench;
mod commands;
mod config;
mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use bench::{cmd_bench, peak_rss_kb, run_bench, BenchRow};
pub use commands::{
    cmd_evolve, cmd_spectrum, cmd_verify, solve, Context, Outcome, Solved, RESIDUAL_NORM_TOL, BOUND_HEADROOM,
    EQUALITY_TOL, SPREAD_TOL, SUBOPTIMAL_SLACK,
};
pub use config::{
    BenchConfig, ExactMode, ExperimentConfig, InitialStateConfig, ObservablesConfig, OutputConfig, SelectionConfig,
    SolverConfig, SolverMode, BENCH_PHASES,
};
pub use output::{header, num, write_csv, VERSION};

use crate::error::{Error, Result};
use crate::pauli::Coupling;

#[derive(Parser, Debug, Clone)]
#[command(name = "reducedyn", version, about = "Reduced eigenbasis dynamics of long-range spin chains")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Overlap spectrum of the initial state, selected states flagged.
    Spectrum,
    /// Reduced expectation series, with the exact series when available.
    Evolve {
        /// Load a saved reduced model instead of solving.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Write the built model to this path.
        #[arg(long)]
        save_model: Option<PathBuf>,
        /// Include projector columns in the saved model.
        #[arg(long)]
        with_projector: bool,
    },
    /// Measured errors against the dense oracle; exit status 1 on any violation.
    Verify {
        /// Replace the weakest selected state by a random unselected one.
        #[arg(long)]
        suboptimal: bool,
    },
    /// Timing and peak memory per phase over a range of chain lengths.
    Bench {
        #[arg(long)]
        min_sites: Option<usize>,
        #[arg(long)]
        max_sites: Option<usize>,
    },
}

/// Flags shared by every subcommand; each one overrides the config file.
#[derive(Args, Debug, Clone, Default)]
pub struct CommonArgs {
    /// TOML experiment config.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Allow dense matrices above the dense guard.
    #[arg(long, global = true)]
    pub override_dense_guard: bool,
    #[arg(long, global = true)]
    pub sites: Option<usize>,
    /// Power-law exponent; switches the coupling to power-law mode.
    #[arg(long, global = true)]
    pub exponent: Option<f64>,
    /// Number of selected states.
    #[arg(long, global = true, conflicts_with = "nu_min")]
    pub k: Option<usize>,
    /// Captured-weight threshold.
    #[arg(long, global = true)]
    pub nu_min: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub mode: Option<SolverMode>,
    #[arg(long, global = true)]
    pub t_end: Option<f64>,
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub exact: Option<ExactMode>,
}

pub fn resolve_config(cli: &Cli) -> Result<ExperimentConfig> {
    let c = &cli.common;
    let mut cfg = match &c.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(out) = &c.out {
        cfg.output.dir = out.clone();
    }
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    if let Some(sites) = c.sites {
        cfg.chain.sites = sites;
    }
    if let Some(exponent) = c.exponent {
        cfg.chain.coupling = Coupling::PowerLaw { exponent };
    }
    if let Some(k) = c.k {
        cfg.selection.k = Some(k);
        cfg.selection.nu_min = None;
    }
    if let Some(nu) = c.nu_min {
        cfg.selection.nu_min = Some(nu);
        cfg.selection.k = None;
    }
    if let Some(mode) = c.mode {
        cfg.solver.mode = mode;
    }
    if let Some(t_end) = c.t_end {
        cfg.grid.t_end = t_end;
    }
    if let Some(samples) = c.samples {
        cfg.grid.samples = samples;
    }
    if let Some(exact) = c.exact {
        cfg.output.exact = exact;
    }
    match &cli.command {
        Command::Evolve {
            save_model,
            with_projector,
            ..
        } => {
            if save_model.is_some() {
                cfg.output.save_model = save_model.clone();
            }
            cfg.output.with_projector |= *with_projector;
        }
        Command::Verify { suboptimal } => cfg.selection.suboptimal |= *suboptimal,
        Command::Bench { min_sites, max_sites } => {
            if let Some(m) = min_sites {
                cfg.bench.min_sites = *m;
            }
            if let Some(m) = max_sites {
                cfg.bench.max_sites = *m;
            }
        }
        Command::Spectrum => {}
    }
    Ok(cfg)
}

pub fn run(cli: &Cli, command_line: &str) -> Result<Outcome> {
    let cfg = resolve_config(cli)?;
    let ctx = Context::new(cfg, cli.common.override_dense_guard, command_line)?;
    match &cli.command {
        Command::Spectrum => cmd_spectrum(&ctx),
        Command::Evolve { model, .. } => cmd_evolve(&ctx, model.as_deref()),
        Command::Verify { .. } => cmd_verify(&ctx, ctx.config.selection.suboptimal),
        Command::Bench { .. } => cmd_bench(&ctx),
    }
}

/// 2 for configuration problems, 3 for solver non-convergence, 1 otherwise.
pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_)
        | Error::InvalidParameter(_)
        | Error::DenseGuard { .. }
        | Error::ZeroKacFactor
        | Error::ModelFormat(_)
        | Error::DimensionMismatch { .. }
        | Error::ThresholdUnreachable { .. }
        | Error::UnknownObservable(_)
        | Error::Json(_) => 2,
        Error::NotConverged { .. } | Error::Breakdown { .. } | Error::PowerIteration { .. } | Error::Propagation { .. } => 3,
        _ => 1,
    }
}
