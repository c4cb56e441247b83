use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use logdet_dspg::{Method, StopRule};

#[derive(Debug, Parser)]
#[command(name = "logdet-dspg", version, about = "Dual spectral projected gradient solver for log-determinant SDPs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Solver configuration file (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,

    #[arg(long, global = true, value_enum)]
    pub method: Option<MethodArg>,

    #[arg(long, global = true, value_enum)]
    pub stop: Option<StopArg>,

    #[arg(long, global = true)]
    pub max_iters: Option<usize>,

    /// Wall-clock limit in seconds.
    #[arg(long, global = true)]
    pub time_limit: Option<f64>,

    /// Overrides the seed of every instance spec.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads for `bench` (default: available parallelism).
    #[arg(long, global = true, env = "LOGDET_DSPG_THREADS")]
    pub threads: Option<usize>,

    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a problem file from an instance spec.
    Generate { spec: PathBuf },
    /// Solve a problem file and write `report.json` and `trace.csv`.
    Solve { problem: PathBuf },
    /// Solve a list of instances and print a summary table.
    Bench {
        /// Instance specs (object or array), or problem files.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Run the built-in oracle and invariant suites.
    Selftest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Dspg,
    Pg,
    Both,
}

impl MethodArg {
    pub fn methods(self) -> Vec<Method> {
        match self {
            MethodArg::Dspg => vec![Method::Dspg],
            MethodArg::Pg => vec![Method::Pg],
            MethodArg::Both => vec![Method::Dspg, Method::Pg],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StopArg {
    Residual,
    Kkt,
}

impl From<StopArg> for StopRule {
    fn from(s: StopArg) -> Self {
        match s {
            StopArg::Residual => StopRule::ProjResidual,
            StopArg::Kkt => StopRule::Kkt,
        }
    }
}
