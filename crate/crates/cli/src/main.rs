//! `transhess`: reports, verification suites, kernel leaves and natural
//! gradient descent from the command line.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or domain error.

mod config;
mod foliate;
mod natgrad;
mod output;
mod report;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "transhess", version, about = "Fisher metrics, kernel foliations and Hessian curvature invariants")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Every pointwise invariant of a potential, or the Fisher metric of a family.
    Report(CommonArgs),
    /// Run the identity suites; exit 0 iff every suite passes.
    Verify(VerifyArgs),
    /// Integrate leaves of the kernel foliation of a degenerate family.
    Foliate(FoliateArgs),
    /// Gradient descent preconditioned by the Fisher pseudo-inverse.
    Natgrad(NatgradArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Run configuration file (JSON or TOML); flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Potential as an expression in `y1..y<dim>`.
    #[arg(long, allow_hyphen_values = true)]
    phi: Option<String>,
    /// Dimension of the potential's domain.
    #[arg(long)]
    dim: Option<usize>,
    /// Family configuration file (JSON or TOML).
    #[arg(long)]
    family: Option<PathBuf>,
    /// Points: coordinates separated by `,`, points by `;`.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "grid")]
    points: Option<String>,
    /// Grid: `min:max:count` per axis, separated by `,`; row-major.
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    /// Tolerance override `name=value`; repeatable.
    #[arg(long = "tol", value_name = "NAME=VALUE")]
    tol: Vec<String>,
    /// Output file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// `json` (one object per line) or `csv`.
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Corpus file replacing the built-in one: `[{name, phi, dim, points}]`.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Random polynomial potentials added to the built-in corpus.
    #[arg(long, default_value_t = 100)]
    random: usize,
    #[arg(long, hide = true)]
    inject_fault: Option<String>,
}

#[derive(Debug, Clone, Args)]
struct FoliateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// RK4 step length.
    #[arg(long, default_value_t = 0.05)]
    step: f64,
    /// Number of RK4 steps per leaf.
    #[arg(long, default_value_t = 20)]
    steps: usize,
    /// Which kernel basis vector at the seed orients the leaf.
    #[arg(long, default_value_t = 0)]
    direction: usize,
}

#[derive(Debug, Clone, Args)]
struct NatgradArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Objective as an expression in `t1..t<m>`.
    #[arg(long, allow_hyphen_values = true)]
    objective: String,
    /// Step size.
    #[arg(long, default_value_t = 0.1)]
    eta: f64,
    #[arg(long, default_value_t = 50)]
    steps: usize,
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<transhess::Error> for Failure {
    fn from(e: transhess::Error) -> Self {
        Failure::usage(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::usage(format!("i/o error: {e}"))
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Report(args) => report::cmd_report(&RunConfig::resolve(&args)?),
        Command::Verify(args) => {
            let run = RunConfig::resolve(&args.common)?;
            verify::cmd_verify(&run, args.corpus.as_deref(), args.random, args.inject_fault.as_deref())
        }
        Command::Foliate(args) => {
            let run = RunConfig::resolve(&args.common)?;
            foliate::cmd_foliate(&run, args.step, args.steps, args.direction)
        }
        Command::Natgrad(args) => {
            let run = RunConfig::resolve(&args.common)?;
            natgrad::cmd_natgrad(&run, &args.objective, args.eta, args.steps)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
