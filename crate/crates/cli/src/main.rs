//! `qrobust`: certified fidelity bounds, sampling and robust design from
//! the command line.

mod commands;
mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qrobust_core::cohbound::GammaMethod;
use qrobust_core::errmodel::Correlation;
use thiserror::Error;

use crate::config::ModelName;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}:{line}: {message}")]
    Config { path: String, line: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Circuit {
        path: String,
        #[source]
        source: qrobust_core::Error,
    },

    #[error(transparent)]
    Core(#[from] qrobust_core::Error),

    #[error("cannot serialize output: {0}")]
    Output(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// 3 for numerical failures, 2 for bad input.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Core(e) | Self::Circuit { source: e, .. } if e.is_numerical() => 3,
            Self::Output(_) => 3,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(
    name = "qrobust",
    version,
    about = "Certified worst-case fidelity bounds for quantum circuits"
)]
pub struct Cli {
    /// JSON run configuration; flags override its keys.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Seed for every randomized step (default: config seed, else 0).
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Output file; without it the document goes to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Output format (default: csv for sweep, json otherwise).
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Worst-case fidelity bounds at one error level.
    Bound(AnalysisArgs),
    /// Robustness measure γ by the chosen methods.
    Gamma(GammaArgs),
    /// Bounds and sampled fidelities on a grid of error levels.
    Sweep(SweepArgs),
    /// Monte Carlo fidelity statistics.
    Sample(SampleArgs),
    /// Robust circuit design.
    Design(DesignArgs),
    /// Bounds for Markovian error channels.
    Channel(ChannelArgs),
}

#[derive(Debug, Clone, Args)]
pub struct AnalysisArgs {
    /// Circuit file, or a builtin: qft<n>, jones[:beta], designed, rx:<angle>, identity:<N>.
    #[arg(long)]
    pub circuit: Option<String>,

    /// Error model: pauli-x, pauli-y, pauli-z, cce.
    #[arg(long)]
    pub model: Option<ModelName>,

    /// Error level (over-rotation bound for cce).
    #[arg(long)]
    pub delta: Option<f64>,

    /// independent (default) or systematic.
    #[arg(long, value_parser = parse_correlation)]
    pub correlation: Option<Correlation>,

    /// Comma-separated list of opt, vertex, norm, partition.
    #[arg(long, value_delimiter = ',')]
    pub gamma_method: Option<Vec<GammaMethod>>,

    /// Multistart budget for optimized bounds.
    #[arg(long)]
    pub starts: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct GammaArgs {
    #[command(flatten)]
    pub analysis: AnalysisArgs,

    /// Explicit partition cut points for the partition method.
    #[arg(long, value_delimiter = ',')]
    pub cuts: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub analysis: AnalysisArgs,

    /// Comma-separated error levels.
    #[arg(long, value_delimiter = ',', conflicts_with = "delta_grid")]
    pub deltas: Option<Vec<f64>>,

    /// Log-spaced grid `lo:hi:n`.
    #[arg(long)]
    pub delta_grid: Option<String>,

    /// Samples per error level (0 disables sampling).
    #[arg(long)]
    pub samples: Option<usize>,

    /// Emit the infidelity scaling curves over δN instead of a circuit sweep.
    #[arg(long)]
    pub scaling: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub analysis: AnalysisArgs,

    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct DesignArgs {
    /// Outer multistart budget.
    #[arg(long)]
    pub starts: Option<usize>,

    /// Designed circuit file (default: the --out path with a .qc extension).
    #[arg(long)]
    pub circuit_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ChannelArgs {
    #[arg(long)]
    pub circuit: Option<String>,

    /// Bound on each layer's error generator.
    #[arg(long)]
    pub delta: Option<f64>,

    /// independent (default) or systematic.
    #[arg(long, value_parser = parse_correlation)]
    pub correlation: Option<Correlation>,

    /// Comma-separated list of opt, vertex, norm.
    #[arg(long, value_delimiter = ',')]
    pub gamma_method: Option<Vec<GammaMethod>>,

    /// Error instance for the instance bound (default: largest rates).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub theta: Option<Vec<f64>>,

    /// Estimate the minimal fidelity with this many random input states.
    #[arg(long)]
    pub fmin_samples: Option<usize>,

    #[arg(long)]
    pub starts: Option<usize>,
}

fn parse_correlation(s: &str) -> Result<Correlation, String> {
    match s {
        "independent" => Ok(Correlation::Independent),
        "systematic" => Ok(Correlation::Systematic),
        other => Err(format!(
            "unknown correlation '{other}' (expected independent or systematic)"
        )),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: cannot start {threads} worker thread(s): {e}");
            return ExitCode::from(2);
        }
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
