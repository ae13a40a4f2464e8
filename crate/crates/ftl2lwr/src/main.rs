//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 for configuration problems, 3 when a
//! convergence or entropy check fails, 4 when a structural invariant of a
//! single run is breached.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ftl2lwr::config::{ExperimentConfig, Mode};
use ftl2lwr::runner::{run_convergence, run_entropy_suite, run_single, Report};
use ftl2lwr::{Error, Result};

#[derive(Parser)]
#[command(
    name = "ftl2lwr",
    version,
    about = "Follow-the-leader traffic simulation and its continuum limit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one platoon and check its structural invariants.
    Run(CommonArgs),
    /// Sweep vehicle counts and compare densities against a reference.
    Converge(CommonArgs),
    /// Evaluate entropy residuals across a refinement sequence.
    Entropy(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Path to the experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; falls back to `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Suppress per-check progress lines.
    #[arg(long)]
    quiet: bool,
}

fn execute(args: &CommonArgs, mode: Mode) -> Result<Report> {
    let config = ExperimentConfig::from_path(&args.config)?;
    let out = args
        .out
        .clone()
        .or_else(|| config.output_dir.clone())
        .ok_or_else(|| {
            Error::Config("no output directory: pass --out or set output_dir".into())
        })?;
    match mode {
        Mode::Single => run_single(&config, &out, args.quiet),
        Mode::Converge => run_convergence(&config, &out, args.quiet),
        Mode::Entropy => run_entropy_suite(&config, &out, args.quiet),
    }
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_)
        | Error::Domain(_)
        | Error::Density(_)
        | Error::Json(_)
        | Error::NonUnimodalFlux(_)
        | Error::PhiSupport { .. }
        | Error::SnapshotResolution { .. } => 2,
        Error::Spacing(_) | Error::StepSize { .. } | Error::BoundaryBreach { .. } => 4,
        Error::Io(_) => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, mode, fail_code) = match &cli.command {
        Command::Run(a) => (a, Mode::Single, 4u8),
        Command::Converge(a) => (a, Mode::Converge, 3u8),
        Command::Entropy(a) => (a, Mode::Entropy, 3u8),
    };
    match execute(args, mode) {
        Ok(report) if report.pass => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(fail_code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
