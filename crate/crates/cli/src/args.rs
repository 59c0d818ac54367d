use std::num::NonZeroUsize;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rds_sync::attractor::DEFAULT_MAX_BACK;
use rds_sync::chain::{
    DEGREE_TWO_IDENTITY_TOLERANCE, RETURN_TIME_TOLERANCE, ROW_SUM_TOLERANCE,
    STATIONARY_RESIDUAL_TOLERANCE,
};
use rds_sync::hitting::DEFAULT_HORIZON;
use rds_sync::rds::MARGINAL_TOLERANCE;
use rds_sync::verify::Tolerances;

#[derive(Debug, Parser)]
#[command(
    name = "rds-sync",
    version,
    about = "Random attractors, insulation and synchronization times of Markov chain representations"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Master seed as up to 32 hex digits. Generated and logged when absent.
    #[arg(long, global = true, env = "RDS_SYNC_SEED")]
    pub seed: Option<String>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<NonZeroUsize>,

    /// Write reports into this directory instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Omit the `meta` block (timestamps, timings) so reports are reproducible byte for byte.
    #[arg(long, global = true)]
    pub no_meta: bool,

    /// Allowed deviation of a row sum from 1.
    #[arg(long, global = true, default_value_t = ROW_SUM_TOLERANCE, value_parser = parse_tolerance)]
    pub row_sum_tol: f64,

    /// Allowed residual of πP = π.
    #[arg(long, global = true, default_value_t = STATIONARY_RESIDUAL_TOLERANCE, value_parser = parse_tolerance)]
    pub residual_tol: f64,

    /// Allowed deviation of E_y[τ_y]·π(y) from 1.
    #[arg(long, global = true, default_value_t = RETURN_TIME_TOLERANCE, value_parser = parse_tolerance)]
    pub return_time_tol: f64,

    /// Relative tolerance of the second-moment identity for E_π[τ_y].
    #[arg(long, global = true, default_value_t = DEGREE_TWO_IDENTITY_TOLERANCE, value_parser = parse_tolerance)]
    pub identity_tol: f64,

    /// Allowed deviation of an explicit map family's one-step law from the kernel.
    #[arg(long, global = true, default_value_t = MARGINAL_TOLERANCE, value_parser = parse_tolerance)]
    pub marginal_tol: f64,
}

impl GlobalArgs {
    pub fn tolerances(&self) -> Tolerances {
        Tolerances {
            row_sum: self.row_sum_tol,
            stationary_residual: self.residual_tol,
            return_time: self.return_time_tol,
            degree_two: self.identity_tol,
            marginal: self.marginal_tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct SpecArgs {
    /// Chain description (JSON).
    #[arg(long)]
    pub spec: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Stationary distribution, period, classes and the degree-2 check.
    Analyze(SpecArgs),

    /// Two-point kernel, insulation relation and a maximum insulated set.
    Insulation {
        #[command(flatten)]
        spec: SpecArgs,
        /// Also write the two-point kernel as a Graphviz file.
        #[arg(long)]
        dot: Option<PathBuf>,
    },

    /// Pullback attractors over independent scenarios.
    Attractor {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
        scenarios: u64,
        #[arg(long, default_value_t = DEFAULT_MAX_BACK, value_parser = clap::value_parser!(u64).range(1..))]
        max_back: u64,
    },

    /// Perfect samples by coupling from the past, with goodness of fit against π.
    Cftp {
        #[command(flatten)]
        spec: SpecArgs,
        /// Number of samples.
        #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
        scenarios: u64,
        /// Largest backward horizon tried.
        #[arg(long, default_value_t = 1 << 20, value_parser = clap::value_parser!(u64).range(1..))]
        horizon: u64,
    },

    /// Monte Carlo synchronization or attraction times.
    HitTimes {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, value_enum, default_value_t = ModeArg::Pi)]
        mode: ModeArg,
        /// Start state (modes `sync` and `hit`).
        #[arg(long)]
        from: Option<String>,
        /// Second start state (mode `sync`).
        #[arg(long)]
        to: Option<String>,
        #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
        scenarios: u64,
        #[arg(long, default_value_t = DEFAULT_HORIZON, value_parser = clap::value_parser!(u64).range(1..))]
        horizon: u64,
        #[arg(long, default_value_t = DEFAULT_MAX_BACK, value_parser = clap::value_parser!(u64).range(1..))]
        max_back: u64,
    },

    /// Full invariant suite.
    Verify {
        #[command(flatten)]
        spec: SpecArgs,
        /// Scenarios for the attractor and class laws.
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        scenarios: Option<u64>,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        horizon: Option<u64>,
    },

    /// Bundled examples with pinned expectations.
    Example {
        name: ExampleName,
        #[arg(long, default_value_t = 0.1, value_parser = parse_epsilon)]
        epsilon: f64,
        #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
        truncation: Option<u64>,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        scenarios: Option<u64>,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        horizon: Option<u64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    /// `T_Δ(x, y)`.
    Sync,
    /// `T_A(x)`.
    Hit,
    /// `T_A` from a π-distributed start.
    Pi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExampleName {
    FourStateIndependent,
    FourStateF1f2,
    EpsilonTwoState,
    TruncatedRandomWalk,
    HeavyTail,
}

impl ExampleName {
    pub fn as_str(self) -> &'static str {
        match self {
            ExampleName::FourStateIndependent => "four-state-independent",
            ExampleName::FourStateF1f2 => "four-state-f1f2",
            ExampleName::EpsilonTwoState => "epsilon-two-state",
            ExampleName::TruncatedRandomWalk => "truncated-random-walk",
            ExampleName::HeavyTail => "heavy-tail",
        }
    }
}

fn parse_epsilon(text: &str) -> Result<f64, String> {
    let eps: f64 = text.parse().map_err(|e| format!("{e}"))?;
    if eps > 0.0 && eps <= 1.0 {
        Ok(eps)
    } else {
        Err(format!("epsilon must lie in (0, 1], got {eps}"))
    }
}

fn parse_tolerance(text: &str) -> Result<f64, String> {
    let tol: f64 = text.parse().map_err(|e| format!("{e}"))?;
    if tol.is_finite() && tol > 0.0 {
        Ok(tol)
    } else {
        Err(format!("tolerance must be positive, got {tol}"))
    }
}
