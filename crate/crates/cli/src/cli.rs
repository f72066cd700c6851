//! Argument parsing and command dispatch.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rydberg_core::lattice::{Boundary, LatticeSpec};
use rydberg_core::observables::{DEFAULT_DIP_THRESHOLD, DEFAULT_MIN_PEAK_FRACTION};
use rydberg_core::scaling::{ObservableKind, DEFAULT_K};

use crate::analysis::{self, HistogramOptions};
use crate::config::RunConfig;
use crate::runner::{self, RunOptions};
use crate::tools::{self, FitOptions, LgwConfig, OracleParams};

#[derive(Debug, Parser)]
#[command(name = "rydberg", version, about = "Quantum Monte Carlo and Landau analysis of Rydberg arrays")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the chains of a single-point configuration.
    Run(RunArgs),
    /// Run every point of the configuration's `[sweep]` grid.
    Sweep(RunArgs),
    /// Summaries, density histograms and bimodality for a run directory.
    Analyze(AnalyzeArgs),
    /// Finite-size scaling fit of an `L,g,y,y_err` CSV.
    Fit(FitArgs),
    /// Data-collapse score at given exponents.
    Collapse(CollapseArgs),
    /// Landau phase map and tricritical points.
    Lgw(LgwArgs),
    /// Exact-diagonalization expectations as CSV.
    Oracle(OracleArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (overrides `output.directory`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Use seeds 1..=N instead of `engine.seeds`.
    #[arg(long)]
    pub seeds: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Continue from the checkpoints in this output directory.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    /// Stop each chain after this many sweeps, leaving a resumable checkpoint.
    #[arg(long)]
    pub max_sweeps: Option<u64>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    pub dir: PathBuf,
    /// Output directory; defaults to the analyzed directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    pub bins: usize,
    /// Samples averaged into one histogram entry.
    #[arg(long, default_value_t = 1)]
    pub block: usize,
    #[arg(long, default_value_t = DEFAULT_DIP_THRESHOLD)]
    pub dip_threshold: f64,
    #[arg(long, default_value_t = DEFAULT_MIN_PEAK_FRACTION)]
    pub min_peak_fraction: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Kind {
    Binder,
    Order,
}

impl From<Kind> for ObservableKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Binder => ObservableKind::Binder,
            Kind::Order => ObservableKind::OrderParam,
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    pub data: PathBuf,
    #[arg(long, value_enum)]
    pub kind: Kind,
    /// Polynomial order of the scaling function.
    #[arg(long, default_value_t = DEFAULT_K)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub l_min: u32,
    #[arg(long)]
    pub g_c: Option<f64>,
    #[arg(long)]
    pub nu: Option<f64>,
    /// Bootstrap replicas (0 disables).
    #[arg(long, default_value_t = 0)]
    pub bootstrap: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the JSON here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CollapseArgs {
    pub data: PathBuf,
    #[arg(long, value_enum)]
    pub kind: Kind,
    #[arg(long)]
    pub g_c: f64,
    #[arg(long)]
    pub nu: f64,
    /// Scale `y` by `L^(β/ν)` before collapsing.
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LgwArgs {
    /// TOML with optional `[couplings]` and `[grid]` tables.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "lgw")]
    pub out: PathBuf,
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BoundaryArg {
    Obc,
    Pbc,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub lx: usize,
    #[arg(long)]
    pub ly: usize,
    #[arg(long, value_enum, default_value = "obc")]
    pub boundary: BoundaryArg,
    #[arg(long)]
    pub rb: f64,
    #[arg(long)]
    pub r0: f64,
    #[arg(long)]
    pub delta: f64,
    #[arg(long)]
    pub beta: f64,
    #[arg(long, default_value = "oracle.csv")]
    pub out: PathBuf,
}

fn write_json(value: &impl serde::Serialize, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(p) => std::fs::write(p, text + "\n").with_context(|| format!("cannot write {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn run_command(a: &RunArgs, sweep: bool) -> Result<()> {
    let mut config = RunConfig::load(&a.config)?;
    if sweep && config.sweep.is_none() {
        bail!("sweep needs a [sweep] table with at least one axis");
    }
    if !sweep && config.sweep.is_some() {
        bail!("the config defines a [sweep] grid; use `rydberg sweep`");
    }
    if let Some(n) = a.seeds {
        if n == 0 {
            bail!("--seeds must be at least 1");
        }
        config.engine.seeds = (1..=n).collect();
    }
    let out = match (&a.resume, &a.out, &config.output.directory) {
        (Some(r), Some(o), _) if r != o => bail!("--resume and --out name different directories"),
        (Some(r), _, _) => r.clone(),
        (None, Some(o), _) => o.clone(),
        (None, None, Some(d)) => d.clone(),
        (None, None, None) => bail!("no output directory: pass --out or set output.directory"),
    };
    let opts = RunOptions {
        resume: a.resume.is_some(),
        max_sweeps: a.max_sweeps,
        workers: a.workers,
    };
    let report = runner::execute(&config, &out, &opts)?;
    eprintln!(
        "{} points, {} chains, summary in {}",
        report.points,
        report.chains,
        report.summary.display()
    );
    if !report.failures.is_empty() {
        bail!("{} chains failed:\n{}", report.failures.len(), report.failures.join("\n"));
    }
    Ok(())
}

pub fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(a) => run_command(&a, false),
        Command::Sweep(a) => run_command(&a, true),
        Command::Analyze(a) => {
            let out = a.out.clone().unwrap_or_else(|| a.dir.clone());
            let opts = HistogramOptions {
                bins: a.bins,
                block: a.block,
                dip_threshold: a.dip_threshold,
                min_peak_fraction: a.min_peak_fraction,
            };
            let reports = analysis::analyze(&a.dir, &out, opts)?;
            for r in reports {
                eprintln!(
                    "point {}: dip {:.3} ({:.1} sigma){}",
                    r.point,
                    r.dip_score,
                    r.significance,
                    if r.is_bimodal { ", bimodal" } else { "" }
                );
            }
            Ok(())
        }
        Command::Fit(a) => {
            let data = tools::read_dataset(&a.data, a.kind.into())?;
            let opts = FitOptions {
                k: a.k,
                l_min: a.l_min,
                g_c: a.g_c,
                nu: a.nu,
                bootstrap: a.bootstrap,
                seed: a.seed,
            };
            let report = rydberg_core::exec::with_workers(a.workers, || tools::fit(&data, opts))??;
            write_json(&report, a.out.as_deref())
        }
        Command::Collapse(a) => {
            let data = tools::read_dataset(&a.data, a.kind.into())?;
            write_json(&tools::collapse(&data, a.g_c, a.nu, a.beta)?, a.out.as_deref())
        }
        Command::Lgw(a) => {
            let cfg = match &a.config {
                Some(p) => {
                    let text = std::fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?;
                    toml::from_str::<LgwConfig>(&text).with_context(|| format!("invalid config {}", p.display()))?
                }
                None => LgwConfig::default(),
            };
            let summary = rydberg_core::exec::with_workers(a.workers, || tools::lgw(&cfg, &a.out))??;
            write_json(&summary, None)
        }
        Command::Oracle(a) => {
            let boundary = match a.boundary {
                BoundaryArg::Obc => Boundary::Obc,
                BoundaryArg::Pbc => Boundary::Pbc,
            };
            tools::oracle_csv(
                OracleParams {
                    lattice: LatticeSpec::new(a.lx, a.ly, boundary)?,
                    rb: a.rb,
                    r0: a.r0,
                    delta: a.delta,
                    beta: a.beta,
                },
                &a.out,
            )
        }
    }
}
