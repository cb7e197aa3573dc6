//! `tachyon`: batch runner for the string-field solvers.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::LevelFilter;
use serde_json::json;

use crate::commands::Output;
use crate::config::{Command, Overrides, RunConfig};
use crate::error::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "tachyon", version, about = "Solve and analyze rolling tachyon profiles")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` config file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    p: Option<u32>,
    /// Width of the closed-string initial guess.
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Depth of the closed-string initial guess.
    #[arg(long, global = true)]
    beta: Option<f64>,
    #[arg(long, global = true)]
    grid_half_width: Option<f64>,
    /// Odd number of nodes.
    #[arg(long, global = true)]
    grid_points: Option<usize>,
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    max_iters: Option<usize>,
    /// Number of leading iterates (from iterate 0) to write out.
    #[arg(long, global = true)]
    record_iterates: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Run even powers instead of rejecting them.
    #[arg(long, global = true)]
    force: bool,
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Open string: phi^p = K_1 phi.
    SolveOpen,
    /// Closed string: psi^(p^2) = K_2 psi.
    SolveClosed,
    /// Open string on a closed-string background.
    SolveOpenClosed {
        /// Background profile; solved as a closed string with the same p when absent.
        #[arg(long)]
        psi0: Option<PathBuf>,
    },
    /// Zeros, bounds and identities of a saved profile.
    Analyze {
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Zero branching of a heat polynomial evolved backward.
    Branching {
        /// Coefficients, lowest degree first (default: t^4).
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        boundary: Option<Vec<f64>>,
        /// Decreasing positive times.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        epsilons: Option<Vec<f64>>,
    },
    /// First closed-string iterates against the reference table.
    ReproduceExamples,
}

fn flag_overrides(cmd: &Cmd, c: &Common) -> Overrides {
    let mut o = Overrides {
        p: c.p,
        alpha: c.alpha,
        beta: c.beta,
        grid_half_width: c.grid_half_width,
        grid_points: c.grid_points,
        tol: c.tol,
        max_iters: c.max_iters,
        record_iterates: c.record_iterates,
        out: c.out.clone(),
        force: c.force.then_some(true),
        ..Overrides::default()
    };
    match cmd {
        Cmd::SolveOpenClosed { psi0 } => o.psi0 = psi0.clone(),
        Cmd::Analyze { input } => o.input = input.clone(),
        Cmd::Branching { boundary, epsilons } => {
            o.boundary = boundary.clone();
            o.epsilons = epsilons.clone();
        }
        _ => {}
    }
    o
}

fn command_of(cmd: &Cmd) -> Command {
    match cmd {
        Cmd::SolveOpen => Command::SolveOpen,
        Cmd::SolveClosed => Command::SolveClosed,
        Cmd::SolveOpenClosed { .. } => Command::SolveOpenClosed,
        Cmd::Analyze { .. } => Command::Analyze,
        Cmd::Branching { .. } => Command::Branching,
        Cmd::ReproduceExamples => Command::ReproduceExamples,
    }
}

fn resolve(cli: &Cli) -> CliResult<RunConfig> {
    let file = match &cli.common.config {
        Some(path) => Overrides::parse_file(path)?,
        None => Overrides::default(),
    };
    RunConfig::resolve(command_of(&cli.command), file.merge(flag_overrides(&cli.command, &cli.common)))
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("error [{}]: {e}", e.code());
    ExitCode::from(e.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(if cli.common.verbose { LevelFilter::Info } else { LevelFilter::Warn })
        .init();

    let cfg = match resolve(&cli) {
        Ok(cfg) => cfg,
        Err(e) => return fail(&e),
    };
    let mut out = match Output::create(&cfg.output_dir) {
        Ok(out) => out,
        Err(e) => return fail(&e),
    };

    let result = commands::run(&cfg, &mut out);
    let report = match &result {
        Ok(o) => json!({
            "command": cfg.command,
            "status": "ok",
            "config": cfg,
            "flags": o.flags,
            "files": out.files(),
            "result": o.result,
        }),
        Err(e) => json!({
            "command": cfg.command,
            "status": "error",
            "config": cfg,
            "files": out.files(),
            "error": { "code": e.code(), "message": e.to_string(), "exit_code": e.exit_code() },
        }),
    };
    let written = out.report(&report);
    match (result, written) {
        (Ok(o), Ok(path)) => {
            for line in o.summary {
                println!("{line}");
            }
            for flag in o.flags {
                println!("flag: {flag}");
            }
            println!("report: {}", path.display());
            ExitCode::SUCCESS
        }
        (Err(e), _) => fail(&e),
        (Ok(_), Err(e)) => fail(&e),
    }
}
