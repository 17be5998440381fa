//! Command-line front end. `run` returns the process exit code: 0 when every
//! check passed, 1 when one failed (outputs are still written), 2 on
//! configuration or IO errors.

pub mod config;
mod commands;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::Error;
use crate::verification::{Identity, LimitKind};

pub use config::RunConfig;
pub use output::Summary;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "dynheat", version, about = "Heat kernels with a diffusive dynamical boundary condition: evaluation, checks and limit experiments")]
pub struct Cli {
    /// JSON run configuration; defaults are used for absent blocks.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory for CSV and JSON files.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads, 0 = one per core.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Treat quadrature that missed its tolerance as a failed check.
    #[arg(long, global = true)]
    pub strict: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate one kernel at one point.
    EvalKernel(EvalArgs),
    /// Mass identities of G, G_LDD and G_HDN over the identity grid.
    MassCheck,
    /// Kernel identities (mass, symmetry, semigroup, PDE residuals, ...).
    IdentitySuite {
        #[arg(long)]
        which: Vec<Identity>,
    },
    /// Evaluate solutions at configured points and times.
    Solve,
    /// Envelope sandwich for H and boundary-trace sharpness.
    BoundsCheck,
    /// Diffusion-limit experiments with rate fits.
    LimitRate {
        #[arg(long)]
        which: Vec<LimitKind>,
    },
    /// Operator-norm decay via the witness datum.
    Opnorm,
    /// Finite-difference oracle against the kernel solution.
    OracleCompare,
    /// Collect summaries in the output directory into report.md.
    Report,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, value_enum)]
    pub kernel: Option<config::KernelName>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub dim: Option<usize>,
    /// Tangential distance |x′ − y′|.
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub xn: Option<f64>,
    #[arg(long)]
    pub yn: Option<f64>,
    #[arg(long)]
    pub t: Option<f64>,
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Io(_) | Error::Domain(_) | Error::Unsupported(_) => EXIT_ERROR,
        _ => EXIT_FAIL,
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    run_cli(&cli)
}

pub fn run_cli(cli: &Cli) -> i32 {
    if cli.threads > 0 {
        // a second initialisation in the same process is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global();
    }
    match commands::dispatch(cli) {
        Ok(summaries) => {
            let failed = summaries.iter().filter(|s| !s.pass || (cli.strict && s.flagged)).count();
            for s in &summaries {
                let status = if s.pass && !(cli.strict && s.flagged) { "PASS" } else { "FAIL" };
                eprintln!("{status} {}", s.experiment);
            }
            if failed == 0 {
                EXIT_PASS
            } else {
                EXIT_FAIL
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}
