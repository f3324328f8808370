//! Command-line parsing.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::run::Command;

#[derive(Debug, Parser)]
#[command(
    name = "evobarrier",
    version,
    about = "Energy barriers and convergence experiments for evolution models with vanishing mutations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Quasi-potential, tree gap, energy barrier and minimum coradius.
    Analyze {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Stationary distribution, spectral gap and Poisson residuals at fixed eps.
    Kernel {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        common: CommonArgs,
        /// Mutation parameter to analyze.
        #[arg(long)]
        eps: Option<f64>,
        /// Sweep eps over 2^-3 .. 2^-10 and fit slopes.
        #[arg(long)]
        grid: bool,
    },
    /// One trajectory of the inhomogeneous chain; occupation at checkpoints.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        schedule: ScheduleArgs,
    },
    /// Replicated Monte Carlo estimate of the convergence rate.
    Rate {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        schedule: ScheduleArgs,
        /// Number of replications.
        #[arg(long)]
        reps: Option<usize>,
        /// Also report mean norms of the four noise terms.
        #[arg(long)]
        terms: bool,
    },
    /// Pseudo-inverse growth diagnostics and noise decomposition.
    Diagnose {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        schedule: ScheduleArgs,
        /// Recompute the pseudo-inverse at every step (horizon <= 1e5).
        #[arg(long)]
        exact: bool,
    },
    /// Write a builtin model as a JSON model file.
    EmitExample {
        #[command(flatten)]
        model: ModelArgs,
        /// Output file (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// JSON file supplying any of the flags.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// JSON model file.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Builtin model: example1, example2, example3 or cloez.
    #[arg(long)]
    pub example: Option<String>,
    /// example1: outward cost.
    #[arg(long)]
    pub a: Option<f64>,
    /// example1: inward cost.
    #[arg(long)]
    pub b: Option<f64>,
    /// example1: chain half-length; example3 and cloez: number of states.
    #[arg(long = "N")]
    pub n: Option<usize>,
    /// example3: row-major N x N prefactor table, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub k: Option<Vec<f64>>,
    /// cloez: perturbation amplitude.
    #[arg(long)]
    pub kappa: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Output directory for CSV files and plot scripts.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Cap on enumerated trees.
    #[arg(long)]
    pub cap: Option<u64>,
    /// JSON file supplying any of the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScheduleArgs {
    /// Schedule exponent: eps_n = scale n^-A.
    #[arg(long = "A")]
    pub schedule_exponent: Option<f64>,
    /// Schedule scale, clipped to eps_max.
    #[arg(long)]
    pub scale: Option<f64>,
    /// Number of steps.
    #[arg(long)]
    pub horizon: Option<u64>,
    /// Initial state name (first declared state by default).
    #[arg(long)]
    pub initial: Option<String>,
    /// Worker threads for replications (0 = all cores).
    #[arg(long)]
    pub workers: Option<usize>,
}

fn flag(b: bool) -> Option<bool> {
    b.then_some(true)
}

impl ModelArgs {
    fn apply(self, c: &mut ExperimentConfig) {
        c.model = self.model;
        c.example = self.example;
        c.a = self.a;
        c.b = self.b;
        c.n = self.n;
        c.k = self.k;
        c.kappa = self.kappa;
    }
}

impl CommonArgs {
    fn apply(self, c: &mut ExperimentConfig) -> Option<PathBuf> {
        c.out = self.out;
        c.seed = self.seed;
        c.cap = self.cap;
        self.config
    }
}

impl ScheduleArgs {
    fn apply(self, c: &mut ExperimentConfig) {
        c.schedule_exponent = self.schedule_exponent;
        c.scale = self.scale;
        c.horizon = self.horizon;
        c.initial = self.initial;
        c.workers = self.workers;
    }
}

impl Cli {
    /// The subcommand and the command-line settings, merged over the config
    /// file if one was named.
    pub fn resolve(self) -> Result<(Command, ExperimentConfig)> {
        let mut c = ExperimentConfig::default();
        let (command, config) = match self.command {
            Sub::Analyze { model, common } => {
                model.apply(&mut c);
                (Command::Analyze, common.apply(&mut c))
            }
            Sub::Kernel { model, common, eps, grid } => {
                model.apply(&mut c);
                c.eps = eps;
                c.grid = flag(grid);
                (Command::Kernel, common.apply(&mut c))
            }
            Sub::Simulate { model, common, schedule } => {
                model.apply(&mut c);
                schedule.apply(&mut c);
                (Command::Simulate, common.apply(&mut c))
            }
            Sub::Rate { model, common, schedule, reps, terms } => {
                model.apply(&mut c);
                schedule.apply(&mut c);
                c.reps = reps;
                c.terms = flag(terms);
                (Command::Rate, common.apply(&mut c))
            }
            Sub::Diagnose { model, common, schedule, exact } => {
                model.apply(&mut c);
                schedule.apply(&mut c);
                c.exact = flag(exact);
                (Command::Diagnose, common.apply(&mut c))
            }
            Sub::EmitExample { model, out, config } => {
                model.apply(&mut c);
                c.out = out;
                (Command::EmitExample, config)
            }
        };
        let c = match config {
            Some(path) => c.merge(ExperimentConfig::load(&path)?),
            None => c,
        };
        Ok((command, c))
    }
}

/// Parses `args` (program name first). Help and version requests are
/// returned as `Ok(Err(text))`.
pub fn parse<I, T>(args: I) -> Result<std::result::Result<Cli, String>>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => Ok(Ok(cli)),
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            Ok(Err(e.to_string()))
        }
        Err(e) => Err(CliError::Flags(e.render().to_string().trim_end().to_string())),
    }
}
