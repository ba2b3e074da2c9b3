//! `cubic-lab`: tables comparing cubic-family L-values with the random model.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cubic_lab::family::{LMethod, Truncation};
use cubic_lab::montecarlo::DEFAULT_SEED;
use cubic_lab::randmodel::Side;
use cubic_lab::tables::tau_grid;
use cubic_lab::LabError;

use output::Format;

const UNITS: &str = "\
Units:
  tau  normalized scale. Large values mean |L(1,chi)| > e^gamma * tau,
       small values mean |L(1,chi)| < (zeta(3)/e^gamma)^(1/2) / tau.
  X    conductor bound of the family of primitive cubic characters.
  y    prime cutoff of the random Euler product (and of the short Euler product).
  N    length of the truncated series sum_{n <= N} chi(n)/n.
A tau grid is written a:b:step (inclusive) or as a single value.";

#[derive(Debug, Parser)]
#[command(name = "cubic-lab", version, about = "Cubic L-values at s = 1 against the random Euler product", after_help = UNITS)]
struct Cli {
    /// Table format for standard output or --out
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Upper bound on worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// C_max, C_min, C_ell and the reference constants
    #[command(after_help = UNITS)]
    Constants {
        /// Odd primes ell for C_ell, comma separated
        #[arg(long, value_delimiter = ',', default_value = "3")]
        ell: Vec<u64>,
        #[command(flatten)]
        out: OutFile,
    },
    /// Enumerate the family up to X, evaluate L(1, chi) and write the tails
    #[command(after_help = UNITS)]
    Family {
        #[command(flatten)]
        family: FamilyArgs,
        /// tau grid for the empirical tails
        #[arg(long, default_value = "1:2:0.1")]
        tau: TauGrid,
        /// Slice cache; read when present, written otherwise
        #[arg(long)]
        cache: Option<PathBuf>,
        /// Directory receiving slice.csv, lvalues.csv and tails.csv
        #[arg(long)]
        out: PathBuf,
    },
    /// Family, Monte Carlo, saddle-point and asymptotic large-value tails side by side
    #[command(after_help = UNITS)]
    Compare {
        #[command(flatten)]
        family: FamilyArgs,
        #[command(flatten)]
        sampler: SamplerArgs,
        #[arg(long, default_value = "1:3:0.25")]
        tau: TauGrid,
        #[command(flatten)]
        out: OutFile,
    },
    /// Complex moments E|L|^{2z}: double sum, Euler product and optionally the family
    #[command(after_help = UNITS)]
    Moments {
        /// Real moment orders z, comma separated
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "-2,-1,-0.5,0.5,1,2")]
        z: Vec<f64>,
        /// Prime cutoff y
        #[arg(long, default_value_t = 10_000)]
        y: u64,
        /// Conductor bound; adds family and family_rel_diff columns
        #[arg(long)]
        x: Option<u64>,
        /// Series length N (or product cutoff) for the family column
        #[arg(long)]
        trunc: Option<u64>,
        #[arg(long, value_enum, default_value_t = MethodArg::Series)]
        method: MethodArg,
        /// Bound on each of r, s, t in the double sum
        #[arg(long, default_value_t = 1_000_000)]
        sum_bound: u64,
        #[command(flatten)]
        out: OutFile,
    },
    /// Monte Carlo tails of the random Euler product
    #[command(name = "montecarlo", after_help = UNITS)]
    MonteCarlo {
        #[command(flatten)]
        sampler: SamplerArgs,
        #[arg(long, default_value = "1:3:0.25")]
        tau: TauGrid,
        #[arg(long, value_enum, default_value_t = SideArg::Max)]
        side: SideArg,
        /// Order ell of the model (3 for cubic characters)
        #[arg(long, default_value_t = 3)]
        ell: u64,
        #[command(flatten)]
        out: OutFile,
    },
}

#[derive(Debug, Args)]
struct OutFile {
    /// Output file (default: standard output)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FamilyArgs {
    /// Conductor bound X
    #[arg(long, default_value_t = 100_000)]
    x: u64,
    #[arg(long, value_enum, default_value_t = MethodArg::Series)]
    method: MethodArg,
    /// Series length N, or prime cutoff y for the short Euler product
    /// (default: N = max(10^6, 50 * conductor), y = 10^4)
    #[arg(long)]
    trunc: Option<u64>,
}

#[derive(Debug, Args)]
struct SamplerArgs {
    /// Prime cutoff y of the random Euler product
    #[arg(long, default_value_t = 10_000)]
    y: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Series,
    Euler,
}

impl From<MethodArg> for LMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Series => LMethod::TruncatedSeries,
            MethodArg::Euler => LMethod::ShortEulerProduct,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SideArg {
    Max,
    Min,
}

impl From<SideArg> for Side {
    fn from(s: SideArg) -> Self {
        match s {
            SideArg::Max => Side::Max,
            SideArg::Min => Side::Min,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct TauGrid(Vec<f64>);

impl FromStr for TauGrid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("bad tau {t:?}: {e}"));
        let parts: Vec<&str> = s.split(':').collect();
        let grid = match parts.as_slice() {
            [a] => vec![num(a)?],
            [a, b, step] => {
                let (a, b, step) = (num(a)?, num(b)?, num(step)?);
                if !(step > 0.0) || b < a {
                    return Err(format!("tau grid {s:?} needs a <= b and step > 0"));
                }
                tau_grid(a, b, step)
            }
            _ => return Err(format!("tau grid {s:?} is not a:b:step or a single value")),
        };
        if grid.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(format!("tau values must be positive, got {s:?}"));
        }
        Ok(TauGrid(grid))
    }
}

fn truncation(t: Option<u64>) -> Truncation {
    t.map_or(Truncation::Default, Truncation::Fixed)
}

fn exit_code(e: &LabError) -> u8 {
    match e {
        LabError::Precondition(_) | LabError::Parse(_) => 2,
        LabError::Budget(_) => 3,
        _ => 1,
    }
}

fn run(cli: Cli) -> cubic_lab::Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(LabError::Precondition("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| LabError::Precondition(e.to_string()))?;
    }
    let format = cli.format;
    match cli.command {
        Command::Constants { ell, out } => commands::emit(&commands::constants(&ell)?, format, out.out.as_deref()),
        Command::Family { family, tau, cache, out } => {
            let summary = commands::family(
                family.x,
                family.method.into(),
                truncation(family.trunc),
                &tau.0,
                cache.as_deref(),
                &out,
            )?;
            commands::emit(&summary, format, None)
        }
        Command::Compare { family, sampler, tau, out } => {
            let t = commands::compare(
                family.x,
                family.method.into(),
                truncation(family.trunc),
                sampler.y,
                sampler.seed,
                sampler.samples,
                &tau.0,
            )?;
            commands::emit(&t, format, out.out.as_deref())
        }
        Command::Moments { z, y, x, trunc, method, sum_bound, out } => {
            let t = commands::moments(&z, y, sum_bound, x.map(|x| (x, method.into(), truncation(trunc))))?;
            commands::emit(&t, format, out.out.as_deref())
        }
        Command::MonteCarlo { sampler, tau, side, ell, out } => {
            let t = commands::montecarlo(sampler.y, sampler.seed, sampler.samples, ell, &tau.0, side.into())?;
            commands::emit(&t, format, out.out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(LabError::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
