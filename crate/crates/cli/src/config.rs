//! Run configuration: built-in defaults, then an optional config file, then
//! command-line flags.
//!
//! Config file grammar, one entry per line:
//!
//! ```text
//! # comment
//! key = value      # trailing comments are allowed
//! ```
//!
//! Keys: `p`, `alpha`, `beta`, `grid_half_width`, `grid_points`, `tol`,
//! `max_iters`, `record_iterates`, `out`, `force`, `psi0`, `input`,
//! `boundary`, `epsilons`. Dashes and underscores are interchangeable.
//! Lists are comma separated.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use tachyon_core::solvers::{Equation, SolverConfig};
use tachyon_core::Grid64;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    SolveOpen,
    SolveClosed,
    SolveOpenClosed,
    Analyze,
    Branching,
    ReproduceExamples,
}

impl Command {
    pub fn equation(self) -> Equation {
        match self {
            Command::SolveClosed | Command::ReproduceExamples => Equation::Closed,
            Command::SolveOpenClosed => Equation::OpenClosed,
            Command::SolveOpen | Command::Analyze | Command::Branching => Equation::Open,
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Command::SolveOpen => "solve-open",
            Command::SolveClosed => "solve-closed",
            Command::SolveOpenClosed => "solve-open-closed",
            Command::Analyze => "analyze",
            Command::Branching => "branching",
            Command::ReproduceExamples => "reproduce-examples",
        })
    }
}

/// Values that may come from the config file or the command line.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub p: Option<u32>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub grid_half_width: Option<f64>,
    pub grid_points: Option<usize>,
    pub tol: Option<f64>,
    pub max_iters: Option<usize>,
    pub record_iterates: Option<usize>,
    pub out: Option<PathBuf>,
    pub force: Option<bool>,
    pub psi0: Option<PathBuf>,
    pub input: Option<PathBuf>,
    pub boundary: Option<Vec<f64>>,
    pub epsilons: Option<Vec<f64>>,
}

impl Overrides {
    /// Fields set in `other` win.
    pub fn merge(self, other: Overrides) -> Overrides {
        Overrides {
            p: other.p.or(self.p),
            alpha: other.alpha.or(self.alpha),
            beta: other.beta.or(self.beta),
            grid_half_width: other.grid_half_width.or(self.grid_half_width),
            grid_points: other.grid_points.or(self.grid_points),
            tol: other.tol.or(self.tol),
            max_iters: other.max_iters.or(self.max_iters),
            record_iterates: other.record_iterates.or(self.record_iterates),
            out: other.out.or(self.out),
            force: other.force.or(self.force),
            psi0: other.psi0.or(self.psi0),
            input: other.input.or(self.input),
            boundary: other.boundary.or(self.boundary),
            epsilons: other.epsilons.or(self.epsilons),
        }
    }

    pub fn parse_file(path: &Path) -> CliResult<Overrides> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Overrides::parse_str(&text).map_err(|(line, message)| CliError::ConfigFile {
            path: path.to_path_buf(),
            line,
            message,
        })
    }

    /// Errors carry the 1-based line number.
    pub fn parse_str(text: &str) -> Result<Overrides, (usize, String)> {
        let mut o = Overrides::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fail = |m: String| (i + 1, m);
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| fail(format!("expected 'key = value', got '{line}'")))?;
            let key = key.trim().replace('-', "_");
            let value = value.trim();
            match key.as_str() {
                "p" => o.p = Some(parse(value).map_err(fail)?),
                "alpha" => o.alpha = Some(parse(value).map_err(fail)?),
                "beta" => o.beta = Some(parse(value).map_err(fail)?),
                "grid_half_width" => o.grid_half_width = Some(parse(value).map_err(fail)?),
                "grid_points" => o.grid_points = Some(parse(value).map_err(fail)?),
                "tol" => o.tol = Some(parse(value).map_err(fail)?),
                "max_iters" => o.max_iters = Some(parse(value).map_err(fail)?),
                "record_iterates" => o.record_iterates = Some(parse(value).map_err(fail)?),
                "out" => o.out = Some(PathBuf::from(value)),
                "force" => o.force = Some(parse(value).map_err(fail)?),
                "psi0" => o.psi0 = Some(PathBuf::from(value)),
                "input" => o.input = Some(PathBuf::from(value)),
                "boundary" => o.boundary = Some(parse_list(value).map_err(fail)?),
                "epsilons" => o.epsilons = Some(parse_list(value).map_err(fail)?),
                other => return Err(fail(format!("unknown key '{other}'"))),
            }
        }
        Ok(o)
    }
}

fn parse<T: FromStr>(value: &str) -> Result<T, String>
where
    T::Err: fmt::Display,
{
    value.parse().map_err(|e| format!("'{value}': {e}"))
}

fn parse_list(value: &str) -> Result<Vec<f64>, String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(parse)
        .collect()
}

pub const DEFAULT_OUT: &str = "out";
/// `t^4`.
pub const DEFAULT_BOUNDARY: [f64; 5] = [0.0, 0.0, 0.0, 0.0, 1.0];
pub const DEFAULT_EPSILONS: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];

/// Fully resolved configuration, echoed verbatim in every report.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub solver: SolverConfig<f64>,
    pub output_dir: PathBuf,
    pub psi0: Option<PathBuf>,
    pub input: Option<PathBuf>,
    pub boundary: Vec<f64>,
    pub epsilons: Vec<f64>,
}

impl RunConfig {
    pub fn resolve(command: Command, o: Overrides) -> CliResult<RunConfig> {
        let mut solver = SolverConfig::<f64>::new(command.equation(), o.p.unwrap_or(tachyon_core::solvers::DEFAULT_P));
        if let Some(a) = o.alpha {
            solver.alpha = a;
        }
        if let Some(b) = o.beta {
            solver.beta = b;
        }
        let half_width = o.grid_half_width.unwrap_or(solver.grid.half_width());
        let points = o.grid_points.unwrap_or(solver.grid.n_points());
        solver.grid = Grid64::new(half_width, points)?;
        if let Some(t) = o.tol {
            solver.tol = t;
        }
        if let Some(m) = o.max_iters {
            solver.max_iters = m;
        }
        if let Some(r) = o.record_iterates {
            solver.record_iterates = r;
        }
        solver.force = o.force.unwrap_or(false);
        Ok(RunConfig {
            command,
            solver,
            output_dir: o.out.unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
            psi0: o.psi0,
            input: o.input,
            boundary: o.boundary.unwrap_or_else(|| DEFAULT_BOUNDARY.to_vec()),
            epsilons: o.epsilons.unwrap_or_else(|| DEFAULT_EPSILONS.to_vec()),
        })
    }
}
