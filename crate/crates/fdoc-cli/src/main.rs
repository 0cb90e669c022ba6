//! `fdoc` — command-line driver for the fractional delay optimal-control
//! toolkit.
//!
//! One command per invocation; exit codes: 0 success, 2 configuration error,
//! 3 numerical failure / non-convergence / I/O error.

mod config;
mod example;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::Kind;
use crate::run::{cmd_check_pmp, cmd_kernels, cmd_solve, cmd_sweep, CliError, Context};

#[derive(Parser)]
#[command(
    name = "fdoc",
    version,
    about = "Solvers, adjoints, and maximum-principle certificates for \
             fractional delay optimal control"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Problem configuration (JSON). Defaults to the bundled worked example.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the grid resolution (nodes per delay interval).
    #[arg(long)]
    nodes_per_delay: Option<usize>,
    /// Output directory for CSV tables and report.json.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    /// Sup-norm control change at which the sweep stops.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Iteration budget of the sweep.
    #[arg(long, default_value_t = 200)]
    max_iter: usize,
    /// Relaxation weight of the control update, in (0, 1].
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the differential-class problem along its constant control and
    /// certify the result.
    SolveFdde {
        #[command(flatten)]
        common: Common,
    },
    /// Solve the integral-class problem along its constant control and
    /// certify the result.
    SolveVide {
        #[command(flatten)]
        common: Common,
    },
    /// Relaxed forward-backward sweep towards a maximum-principle point.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sweep: SweepArgs,
    },
    /// Residual certificate of the maximum condition along a fixed control.
    CheckPmp {
        #[command(flatten)]
        common: Common,
    },
    /// Reproduce the bundled worked example end to end.
    #[command(name = "example4")]
    Example4 {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sweep: SweepArgs,
    },
    /// Tabulate the pure-delay fundamental matrix and delayed control kernel.
    Kernels {
        #[command(flatten)]
        common: Common,
    },
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::SolveFdde { common } => {
            let ctx = Context::build(
                common.config.as_deref(),
                common.nodes_per_delay,
                &common.out,
                Kind::Fdde,
            )?;
            cmd_solve(&ctx, Kind::Fdde)
        }
        Command::SolveVide { common } => {
            let ctx = Context::build(
                common.config.as_deref(),
                common.nodes_per_delay,
                &common.out,
                Kind::Vide,
            )?;
            cmd_solve(&ctx, Kind::Vide)
        }
        Command::Sweep { common, sweep } => {
            let ctx = Context::build(
                common.config.as_deref(),
                common.nodes_per_delay,
                &common.out,
                Kind::Fdde,
            )?;
            cmd_sweep(&ctx, sweep.tol, sweep.max_iter, sweep.beta)
        }
        Command::CheckPmp { common } => {
            let ctx = Context::build(
                common.config.as_deref(),
                common.nodes_per_delay,
                &common.out,
                Kind::Fdde,
            )?;
            cmd_check_pmp(&ctx)
        }
        Command::Example4 { common, sweep } => example::run_example4(
            &common.out,
            common.nodes_per_delay.unwrap_or(128),
            sweep.tol,
            sweep.max_iter,
            sweep.beta,
        ),
        Command::Kernels { common } => {
            let ctx = Context::build(
                common.config.as_deref(),
                common.nodes_per_delay,
                &common.out,
                Kind::Fdde,
            )?;
            cmd_kernels(&ctx)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
