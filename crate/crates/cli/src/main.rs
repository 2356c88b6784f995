mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use localdirac_core::io::Format;
use localdirac_core::recovery::Solver;
use serde::Serialize;

/// Moment-based recovery of local Dirac mixtures.
#[derive(Debug, Parser, Serialize)]
#[command(name = "localdirac", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Serialize)]
struct Global {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Newton tolerance for recovery, threshold for ideal-check.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Number of Newton starts.
    #[arg(long, global = true)]
    starts: Option<usize>,
    /// Output file (stdout if omitted).
    #[arg(long, global = true)]
    #[serde(skip)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = OutFormat::Json)]
    format: OutFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum OutFormat {
    Json,
    Csv,
}

impl From<OutFormat> for Format {
    fn from(f: OutFormat) -> Self {
        match f {
            OutFormat::Json => Format::Json,
            OutFormat::Csv => Format::Csv,
        }
    }
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Forward moments of a mixture or Pareto spec.
    GenMoments {
        /// JSON spec: {"components": [{"xi", "lambdas"}]} or {"pareto": {"alpha", "xi"}}.
        #[arg(long)]
        spec: PathBuf,
        /// Highest moment degree.
        #[arg(short, long)]
        d: usize,
    },
    /// Recover mixture parameters from moments.
    Recover {
        #[arg(long)]
        moments: PathBuf,
        #[arg(short, long)]
        r: usize,
        #[arg(short, long, default_value_t = 0)]
        l: usize,
        #[arg(long, value_enum, default_value_t = Method::Prony)]
        method: Method,
        #[arg(long, value_enum, default_value_t = SolverArg::Auto)]
        solver: SolverArg,
        /// Keep only real parameters with weights in [0, 1].
        #[arg(long)]
        statistical: bool,
        /// Report the best candidate even when the selector is inconclusive.
        #[arg(long)]
        allow_ambiguous: bool,
    },
    /// Piecewise-linear signals and their Fourier coefficients.
    Fourier {
        #[command(subcommand)]
        action: FourierCmd,
    },
    /// Local Gaussian mixtures.
    Statmix {
        #[command(subcommand)]
        action: StatmixCmd,
    },
    /// Evaluate a generator family on a moment vector.
    IdealCheck {
        #[arg(long)]
        moments: PathBuf,
        /// fij, delta3, second-order, delta<n>, pareto or cremona.
        #[arg(long)]
        family: String,
    },
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum FourierCmd {
    /// Fourier coefficients c_(-s)..c_s of a signal, optionally with noise.
    Coeffs {
        #[arg(long)]
        signal: PathBuf,
        #[arg(short, long)]
        s: usize,
        /// Standard deviation of Gaussian noise on each coefficient.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
    },
    /// Reconstruct a signal with `segments` breakpoints from coefficients.
    Recon {
        #[arg(long)]
        coeffs: PathBuf,
        #[arg(short = 'r', long)]
        segments: usize,
        /// Reference signal for error reporting.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum StatmixCmd {
    /// Draw a sample from a local Gaussian mixture.
    Sample {
        /// JSON: {"sigma", "components": [{"xi", "weight", "alphas"}]}.
        #[arg(long)]
        model: PathBuf,
        #[arg(short, long)]
        n: usize,
    },
    /// Estimate local Gaussian mixture parameters from a sample.
    Estimate {
        #[arg(long)]
        sample: PathBuf,
        #[arg(short = 'r', long)]
        components: usize,
        #[arg(short = 'l', long)]
        order: usize,
        /// Highest empirical moment used; defaults to the minimum plus one.
        #[arg(short, long)]
        d: Option<usize>,
        /// Standard deviation of the Gaussian base.
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Method {
    /// Minimal-moment route.
    Prony,
    /// Classical Prony with multiplicities on all moments.
    Linear,
    /// Closed form for r = 2, l = 1.
    Elimination,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum SolverArg {
    Auto,
    Homotopy,
    Newton,
}

impl From<SolverArg> for Solver {
    fn from(s: SolverArg) -> Self {
        match s {
            SolverArg::Auto => Solver::Auto,
            SolverArg::Homotopy => Solver::Homotopy,
            SolverArg::Newton => Solver::Newton,
        }
    }
}

fn init_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("LOCALDIRAC_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| format!("LOCALDIRAC_THREADS: '{v}' is not a number"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}
