//! `distmaj` command-line front end.
//!
//! Exit status is 0 when the solve converged, 2 when it stopped without
//! converging, and 1 on any input or usage error.

mod commands;
mod source;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use distmaj::applications::Method;

#[derive(Parser, Debug)]
#[command(name = "distmaj", version, about = "Distance majorization solvers")]
struct Cli {
    /// Worker threads for solver-internal parallelism (0 = all cores).
    #[arg(long, global = true, env = "DISTMAJ_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Find a point in an intersection of halfspaces (`a1..ap,b` rows).
    Feasibility(SolveArgs),
    /// Nearest doubly nonnegative matrix to a symmetric matrix.
    ProjectDnn(SolveArgs),
    /// Isotonic regression in the first predictor (`x`, `y`, optional `w`).
    Isotone(SolveArgs),
    /// Convex regression (`x1..xp`, `y`, optional `w`).
    Convexreg(SolveArgs),
    /// Linear soft-margin SVM; labels in `y` are -1 or 1 and an intercept
    /// column is added.
    Svm {
        #[command(flatten)]
        args: SolveArgs,
        /// Ridge penalty on the coefficients.
        #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
        lambda: f64,
    },
    /// Point minimizing the summed distance to rectangles (`cx,cy,hx,hy`);
    /// the five built-in buildings without input.
    Firestation {
        #[command(flatten)]
        source: Source,
        #[arg(long, value_enum, default_value_t = NormArg::L1)]
        norm: NormArg,
        /// Starting point `x,y`.
        #[arg(long, default_value = "0,0", value_parser = parse_point, allow_hyphen_values = true)]
        start: (f64, f64),
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tukey biweight regression (`x1..xp`, `y`).
    Robust {
        #[command(flatten)]
        args: SolveArgs,
        /// Biweight cutoff `c`.
        #[arg(long, default_value_t = 4.685, allow_negative_numbers = true)]
        cutoff: f64,
    },
    /// MM iterates for cos(x) and the minimum SUMMA gap.
    CosineDemo {
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        x0: f64,
        #[arg(long, default_value_t = 100)]
        steps: usize,
    },
    /// Compare MM, MM-QN, Dual and Dual-FISTA on one instance.
    Bench {
        #[arg(long, value_enum, default_value_t = BenchProblem::Dnn)]
        problem: BenchProblem,
        #[arg(long, default_value_t = 50)]
        size: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Directory for `bench.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic dataset as CSV.
    Generate {
        #[arg(long, value_enum)]
        kind: Kind,
        /// Cases, matrix order or number of halfspaces.
        #[arg(long)]
        size: Option<usize>,
        /// Predictors or dimension where the kind has one.
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        seed: u64,
        /// Output file; standard output when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

/// Where the data comes from: a CSV file or a seeded generator.
#[derive(Args, Debug, Clone)]
struct Source {
    /// CSV input file.
    #[arg(long, conflicts_with = "generate")]
    input: Option<PathBuf>,
    /// Synthetic data from `n=.. p=.. seed=..` pairs.
    #[arg(long, num_args = 1.., value_name = "KEY=VALUE")]
    generate: Option<Vec<String>>,
}

#[derive(Args, Debug, Clone)]
struct SolveArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, value_enum, default_value_t = SolverArg::MmQn)]
    solver: SolverArg,
    /// Inner stopping threshold on the relative step.
    #[arg(long, allow_negative_numbers = true)]
    rho: Option<f64>,
    /// Secants for quasi-Newton acceleration.
    #[arg(long)]
    secants: Option<usize>,
    /// Directory for `summary.json`, `trace.csv` and the fitted values.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum SolverArg {
    Mm,
    MmQn,
    Dual,
    DualFista,
}

impl SolverArg {
    fn method(self) -> Method {
        match self {
            SolverArg::Mm => Method::Mm,
            SolverArg::MmQn => Method::MmQn,
            SolverArg::Dual => Method::Dual,
            SolverArg::DualFista => Method::DualFista,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum NormArg {
    L1,
    L2,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum BenchProblem {
    Dnn,
    Isotone,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Feasibility,
    Dnn,
    Isotone,
    Convexreg,
    Svm,
    Firestation,
    Robust,
}

fn parse_point(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b] => match (a.parse(), b.parse()) {
            (Ok(x), Ok(y)) => Ok((x, y)),
            _ => Err(format!("`{s}` is not a point `x,y`")),
        },
        _ => Err(format!("`{s}` is not a point `x,y`")),
    }
}

/// Outcome of a command that ran to completion.
enum Status {
    Converged,
    NotConverged,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) if !err.use_stderr() => {
            // help and version
            let _ = err.print();
            return ExitCode::SUCCESS;
        }
        Err(err) => {
            let text = err.to_string();
            eprintln!("{}", text.lines().next().unwrap_or("invalid arguments"));
            return ExitCode::from(1);
        }
    };
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: cannot configure {threads} threads: {e}");
            return ExitCode::from(1);
        }
    }
    match commands::run(cli.command) {
        Ok(Status::Converged) => ExitCode::SUCCESS,
        Ok(Status::NotConverged) => ExitCode::from(2),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
