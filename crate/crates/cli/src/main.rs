//! `hdtest`: two-sample mean tests for high-dimensional data from the
//! command line.
//!
//! Exit status: 0 success, 1 usage error, 2 data or parse error, 3
//! degenerate variance estimate, 4 internal error.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "hdtest", version, about = "High-dimensional two-sample mean tests")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Emit JSON instead of TSV.
    #[arg(long, global = true)]
    pub json: bool,
    /// Print numbers in shortest round-trip form instead of 6 significant digits.
    #[arg(long, global = true)]
    pub full_precision: bool,
    /// Worker threads for simulations and gene-set screening (0 = all cores).
    #[arg(long, global = true, env = "HDTEST_THREADS")]
    pub threads: Option<usize>,
    /// Write the main output here instead of stdout.
    #[arg(long, short = 'o', global = true)]
    pub output: Option<PathBuf>,
}

impl Global {
    pub fn digits(&self) -> Option<usize> {
        (!self.full_precision).then_some(6)
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestMethod {
    ChenQin,
    Bs,
    Hotelling,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrectionArg {
    Bh,
    Bonferroni,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelArg {
    Identity,
    Two,
    Full,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnovationArg {
    Normal,
    Gamma,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum AllocationArg {
    Equal,
    Increasing,
    Decreasing,
}

#[derive(Args, Debug, Clone)]
pub struct GeneSetArgs {
    /// Expression matrix, genes x samples (CSV or TSV).
    #[arg(long)]
    pub expr: PathBuf,
    /// Sample labels: sample_id, group.
    #[arg(long)]
    pub labels: PathBuf,
    /// Gene-set catalog in GMT format.
    #[arg(long)]
    pub gmt: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value_t = CorrectionArg::Bh)]
    pub correction: CorrectionArg,
    /// Sets with at most this many genes use Hotelling's T² [default: (n1+n2-2)/2].
    #[arg(long)]
    pub hotelling_max_p: Option<usize>,
    /// Write P-value and Q_n histogram data (TSV) here.
    #[arg(long)]
    pub hist: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    pub bins: usize,
    /// Write the JSON summary here.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Test equality of two mean vectors.
    TwoSample {
        /// First sample, observations x variables (CSV or TSV, optional header).
        #[arg(long)]
        x: PathBuf,
        /// Second sample.
        #[arg(long)]
        y: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, value_enum, default_value_t = TestMethod::ChenQin)]
        method: TestMethod,
        /// Two-sided normal calibration (Chen–Qin only).
        #[arg(long)]
        two_sided: bool,
        /// Inputs are variables x observations.
        #[arg(long)]
        transpose: bool,
    },
    /// One-sample test that paired differences have mean zero.
    Paired {
        /// Differences, observations x variables.
        #[arg(long, conflicts_with_all = ["x", "y"], required_unless_present_all = ["x", "y"])]
        diffs: Option<PathBuf>,
        /// First member of each pair; differences are x - y.
        #[arg(long, requires = "y")]
        x: Option<PathBuf>,
        #[arg(long, requires = "x")]
        y: Option<PathBuf>,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long)]
        transpose: bool,
    },
    /// Test every gene set in a catalog between two labelled groups.
    Geneset(GeneSetArgs),
    /// Split one group at random and test every set between the halves.
    Backtest {
        #[command(flatten)]
        sets: GeneSetArgs,
        /// Label of the group to split.
        #[arg(long)]
        group: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Run a Monte Carlo size/power study.
    Simulate {
        /// Scenario file (key = value lines).
        #[arg(long, required_unless_present = "grid")]
        config: Option<PathBuf>,
        /// Run the moving-average allocation x true-null grid instead.
        #[arg(long, value_enum, conflicts_with = "config")]
        grid: Option<ModelArg>,
        /// Dimension for --grid.
        #[arg(long, default_value_t = 500, requires = "grid")]
        p: usize,
        #[arg(long, value_enum, default_value_t = InnovationArg::Gamma)]
        innovation: InnovationArg,
        /// Override the replication count.
        #[arg(long)]
        reps: Option<usize>,
        /// Override the seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Report estimator ratios instead of rejection rates.
        #[arg(long, conflicts_with = "grid")]
        trace_ratios: bool,
    },
    /// Asymptotic power under local and fixed alternatives.
    Power {
        #[arg(long)]
        n1: usize,
        #[arg(long)]
        n2: usize,
        /// ||mu1 - mu2||^2.
        #[arg(long)]
        delta_norm_sq: f64,
        /// tr(Sigma_tilde^2).
        #[arg(long)]
        tr_sigma_sq: f64,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Sample fraction [default: n1/(n1+n2)].
        #[arg(long)]
        k: Option<f64>,
    },
    /// Check which asymptotic regime a configuration is in.
    Diagnose {
        /// Banded model for both covariances.
        #[arg(long, value_enum, conflicts_with_all = ["sigma1", "sigma2"])]
        model: Option<ModelArg>,
        #[arg(long, value_enum, default_value_t = InnovationArg::Normal)]
        innovation: InnovationArg,
        /// Dimension for --model.
        #[arg(long)]
        p: Option<usize>,
        /// Explicit covariance of sample 1 (square CSV).
        #[arg(long, required_unless_present = "model")]
        sigma1: Option<PathBuf>,
        /// Explicit covariance of sample 2 [default: same as sample 1].
        #[arg(long, requires = "sigma1")]
        sigma2: Option<PathBuf>,
        /// Mean difference vector (one row or column).
        #[arg(long, conflicts_with = "eta")]
        mu_diff: Option<PathBuf>,
        /// Build the mean difference from eta = ||mu||^2 / sqrt(tr Sigma^2).
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long, default_value_t = 0.0)]
        pct_true_null: f64,
        #[arg(long, value_enum, default_value_t = AllocationArg::Equal)]
        allocation: AllocationArg,
        #[arg(long)]
        n1: usize,
        #[arg(long)]
        n2: usize,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
}

/// Failure with its exit status.
#[derive(Debug)]
pub enum CliError {
    Lib(hdtest::Error),
    Usage(String),
    Internal(String),
}

impl From<hdtest::Error> for CliError {
    fn from(e: hdtest::Error) -> Self {
        CliError::Lib(e)
    }
}

impl CliError {
    fn code(&self) -> u8 {
        use hdtest::Error as E;
        match self {
            CliError::Usage(_) | CliError::Lib(E::InvalidArgument(_)) => 1,
            CliError::Lib(E::DegenerateVariance { .. }) => 3,
            CliError::Lib(_) => 2,
            CliError::Internal(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let outcome = std::panic::catch_unwind(|| commands::run(&cli));
    match outcome {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("hdtest: {e}");
            ExitCode::from(e.code())
        }
        Err(_) => ExitCode::from(4),
    }
}
