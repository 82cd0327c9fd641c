//! `detopt`: build and check multistationarity certificates.
//!
//! Exit codes: 0 success, 1 input error, 2 method inconclusive,
//! 3 verification failure.

mod commands;
mod lists;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "detopt",
    version,
    about = "Determinant optimization certificates for reaction networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a certificate from a network file, or from closed forms with `kmn`.
    Construct(ConstructArgs),
    /// Re-check a certificate file from scratch.
    Verify(VerifyArgs),
    /// Recompute the n = 3 determinant table and compare with the printed values.
    Table1(Table1Args),
    /// Closed-form certificates over a grid of (m, n).
    Scan(ScanArgs),
    /// Jacobian determinants of the closed-form certificate as eps varies.
    Sweep(SweepArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum StrategyArg {
    Bisect,
    FreeVariable,
}

#[derive(Args, Debug, Clone)]
struct Tolerances {
    /// Residual tolerance, relative to the largest term of f(x).
    #[arg(long, default_value_t = 1e-10)]
    tol_residual: f64,
    /// Nondegeneracy threshold on |det| / Hadamard bound.
    #[arg(long, default_value_t = 1e-8)]
    tol_det: f64,
}

#[derive(Args, Debug)]
struct ConstructArgs {
    /// Network file, or `kmn` for the sequestration closed forms.
    input: String,
    #[arg(long)]
    m: Option<u32>,
    #[arg(long)]
    n: Option<usize>,
    /// Reaction numbers (1-based) of the witness, comma separated.
    #[arg(long, value_delimiter = ',')]
    witness: Option<Vec<usize>>,
    /// Witness weights, comma separated.
    #[arg(long, value_delimiter = ',')]
    eta_tilde: Option<Vec<f64>>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    /// First entry of delta (kmn) or the starting scale of delta (files).
    #[arg(long)]
    delta1: Option<f64>,
    #[arg(long, value_enum, default_value = "bisect")]
    strategy: StrategyArg,
    #[command(flatten)]
    tol: Tolerances,
    /// Certificate output path; without it the certificate goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    certificate: PathBuf,
    #[command(flatten)]
    tol: Tolerances,
}

#[derive(Args, Debug)]
struct Table1Args {
    /// CSV output path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ScanArgs {
    /// Values of m: `2..5` or `2,3,4`.
    #[arg(long, default_value = "2..5")]
    m: String,
    /// Values of n: `5,7,9,11` or `5..11` (odd values only are valid).
    #[arg(long, default_value = "5,7,9,11")]
    n: String,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    delta1: f64,
    /// Directory for one `scan_n<N>.csv` per n.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long, default_value_t = 2)]
    m: u32,
    #[arg(long, default_value_t = 3)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Range of eps: `lo..hi`.
    #[arg(long, default_value = "0.05..1.3")]
    eps: String,
    /// Number of grid intervals.
    #[arg(long, default_value_t = 500)]
    steps: usize,
    /// CSV output path.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Construct(a) => commands::construct(a),
        Command::Verify(a) => commands::verify(a),
        Command::Table1(a) => commands::table1(a),
        Command::Scan(a) => commands::scan(a),
        Command::Sweep(a) => commands::sweep(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}
