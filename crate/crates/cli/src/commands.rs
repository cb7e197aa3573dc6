use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use log::info;
use serde::Serialize;
use serde_json::{json, Value};
use tachyon_core::analysis::{
    assign_multiplicity, bound_report, branching_analysis, conservation_check, derivative_identity, estimate_exponent,
    find_zeros, integrability_report, partial_mass_bound, sandwich_report, sign_change_count, IntegrabilityKind,
    ZeroInfo, DEFAULT_WINDOW, DEFAULT_ZERO_TOL,
};
use tachyon_core::hermite::moment;
use tachyon_core::reproduction::reproduce_examples;
use tachyon_core::solvers::{solve_closed, solve_open, solve_open_closed, Equation, Solution, SolverConfig};
use tachyon_core::{HeatPolynomial64, Parity, Profile64};

use crate::config::{Command, RunConfig};
use crate::error::{CliError, CliResult};

/// Step used for the off-grid derivative check on closed-string profiles.
const DERIVATIVE_STEP: f64 = 1e-4;
const CONSERVATION_XS: [f64; 3] = [0.25, 0.5, 1.0];
const PARTIAL_MASS_AS: [f64; 3] = [-1.0, 0.0, 1.0];

/// Collects the files written by a run, keyed by role.
pub struct Output {
    dir: PathBuf,
    files: BTreeMap<String, String>,
}

impl Output {
    pub fn create(dir: &Path) -> CliResult<Output> {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Write {
            path: dir.to_path_buf(),
            source,
        })?;
        Ok(Output {
            dir: dir.to_path_buf(),
            files: BTreeMap::new(),
        })
    }

    fn path(&mut self, role: &str, name: &str) -> PathBuf {
        self.files.insert(role.to_string(), name.to_string());
        self.dir.join(name)
    }

    fn profile(&mut self, role: &str, name: &str, p: &Profile64) -> CliResult<()> {
        let path = self.path(role, name);
        p.save_csv(&path).map_err(|e| match e {
            tachyon_core::Error::Io(source) => CliError::Write { path, source },
            other => other.into(),
        })
    }

    fn table(&mut self, role: &str, name: &str, header: &[String], rows: &[Vec<String>]) -> CliResult<()> {
        let path = self.path(role, name);
        let write = || -> csv::Result<()> {
            let mut w = csv::Writer::from_path(&path)?;
            w.write_record(header)?;
            for r in rows {
                w.write_record(r)?;
            }
            w.flush()?;
            Ok(())
        };
        write().map_err(|e| CliError::Write {
            path: path.clone(),
            source: e.into(),
        })
    }

    /// Writes `report.json`, pretty printed with a trailing newline.
    pub fn report(&self, report: &Value) -> CliResult<PathBuf> {
        let path = self.dir.join("report.json");
        let mut text = serde_json::to_string_pretty(report)?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|source| CliError::Write {
            path: path.clone(),
            source,
        })?;
        Ok(path)
    }

    pub fn files(&self) -> &BTreeMap<String, String> {
        &self.files
    }
}

/// Results of a successful run, before the common report fields are added.
pub struct Outcome {
    pub flags: Vec<String>,
    pub result: Value,
    /// Lines printed to stdout after the run.
    pub summary: Vec<String>,
}

pub fn run(cfg: &RunConfig, out: &mut Output) -> CliResult<Outcome> {
    match cfg.command {
        Command::SolveOpen => run_open(cfg, out),
        Command::SolveClosed => run_closed(cfg, out),
        Command::SolveOpenClosed => run_open_closed(cfg, out),
        Command::Analyze => run_analyze(cfg, out),
        Command::Branching => run_branching(cfg, out),
        Command::ReproduceExamples => run_reproduce(cfg, out),
    }
}

fn load(path: &Path) -> CliResult<Profile64> {
    Profile64::load_csv(path).map_err(|e| match e {
        tachyon_core::Error::Io(source) => CliError::Read {
            path: path.to_path_buf(),
            source,
        },
        other => other.into(),
    })
}

fn f(x: f64) -> String {
    x.to_string()
}

fn flags(sol: &Solution<f64>) -> Vec<String> {
    sol.flags.iter().map(|f| f.to_string()).collect()
}

fn zeros_with_exponents(p: &Profile64, power: f64) -> Value {
    let mut zeros = find_zeros(p, DEFAULT_ZERO_TOL);
    assign_multiplicity(&mut zeros, power);
    Value::Array(zeros.iter().map(|z| zero_entry(p, z)).collect())
}

fn zero_entry(p: &Profile64, z: &ZeroInfo<f64>) -> Value {
    let mut v = serde_json::to_value(z).expect("plain data");
    let window = estimate_exponent(p, z, DEFAULT_WINDOW);
    v["window_exponent"] = match window {
        Ok(q) => json!(q),
        Err(e) => json!({ "error": e.code(), "message": e.to_string() }),
    };
    v
}

fn fallible<T: Serialize>(r: tachyon_core::Result<T>) -> Value {
    match r {
        Ok(x) => serde_json::to_value(x).expect("plain data"),
        Err(e) => json!({ "error": e.code(), "message": e.to_string() }),
    }
}

fn solution_summary(sol: &Solution<f64>) -> Value {
    json!({
        "converged": sol.trace.converged,
        "iters_used": sol.trace.iters_used,
        "residual": sol.residual,
        "final_delta": sol.trace.deltas.last(),
        "trace": sol.trace,
    })
}

/// Profiles of recorded iterates plus the plot table `t, iterate_0, ..., final`.
fn write_iterates(out: &mut Output, prefix: &str, sol: &Solution<f64>) -> CliResult<()> {
    for (k, it) in sol.iterates.iter().enumerate() {
        out.profile(&format!("{prefix}iterate_{k}"), &format!("{prefix}iterate_{k}.csv"), it)?;
    }
    let mut header = vec!["t".to_string()];
    header.extend((0..sol.iterates.len()).map(|k| format!("iterate_{k}")));
    header.push("final".into());
    let rows: Vec<Vec<String>> = sol
        .profile
        .grid()
        .nodes()
        .enumerate()
        .map(|(i, t)| {
            let mut row = vec![f(t)];
            row.extend(sol.iterates.iter().map(|it| f(it.values()[i])));
            row.push(f(sol.profile.values()[i]));
            row
        })
        .collect();
    out.table(&format!("{prefix}plot_data"), &format!("{prefix}plot_data.csv"), &header, &rows)
}

fn open_analysis(phi: &Profile64, p: u32) -> Value {
    let masses: Vec<Value> = CONSERVATION_XS
        .iter()
        .flat_map(|&x| PARTIAL_MASS_AS.iter().map(move |&a| (x, a)))
        .map(|(x, a)| {
            fallible(partial_mass_bound(phi, x, a).map(|m| json!({ "mass": m, "holds": m.holds() })))
        })
        .collect();
    json!({
        "zeros": zeros_with_exponents(phi, f64::from(p)),
        "sign_changes": sign_change_count(phi),
        "conservation": fallible(conservation_check(phi, p, &CONSERVATION_XS)),
        "partial_mass": masses,
        "integrability": fallible(integrability_report(phi, p, IntegrabilityKind::OpenOdd)),
        "moments": [fallible(moment(phi, 0)), fallible(moment(phi, 1))],
        "bounds": fallible(bound_report(phi, None)),
    })
}

fn closed_analysis(psi: &Profile64, p: u32) -> Value {
    json!({
        "zeros": zeros_with_exponents(psi, f64::from(p * p)),
        "sign_changes": sign_change_count(psi),
        "integrability": fallible(integrability_report(psi, p, IntegrabilityKind::Closed)),
        "derivative_identity": fallible(derivative_identity(psi, p, DERIVATIVE_STEP)),
        "bounds": fallible(bound_report(psi, None)),
    })
}

fn converged_line(name: &str, sol: &Solution<f64>) -> String {
    format!(
        "{name}: converged={} iters={} residual={:e}",
        sol.trace.converged, sol.trace.iters_used, sol.residual
    )
}

fn run_open(cfg: &RunConfig, out: &mut Output) -> CliResult<Outcome> {
    let sol = solve_open(&cfg.solver)?;
    info!("open string solved in {} iterations", sol.trace.iters_used);
    out.profile("profile", "profile.csv", &sol.profile)?;
    write_iterates(out, "", &sol)?;
    let mut analysis = open_analysis(&sol.profile, cfg.solver.p);
    analysis["sandwich"] = fallible(sandwich_report(&sol.trace, cfg.solver.p));
    Ok(Outcome {
        flags: flags(&sol),
        summary: vec![converged_line("phi", &sol)],
        result: json!({ "solution": solution_summary(&sol), "analysis": analysis }),
    })
}

fn run_closed(cfg: &RunConfig, out: &mut Output) -> CliResult<Outcome> {
    let sol = solve_closed(&cfg.solver)?;
    info!("closed string solved in {} iterations", sol.trace.iters_used);
    out.profile("profile", "profile.csv", &sol.profile)?;
    write_iterates(out, "", &sol)?;
    Ok(Outcome {
        flags: flags(&sol),
        summary: vec![converged_line("psi", &sol)],
        result: json!({
            "solution": solution_summary(&sol),
            "analysis": closed_analysis(&sol.profile, cfg.solver.p),
        }),
    })
}

fn run_open_closed(cfg: &RunConfig, out: &mut Output) -> CliResult<Outcome> {
    let p = cfg.solver.p;
    let mut summary = Vec::new();
    let (psi0, psi0_source) = match &cfg.psi0 {
        Some(path) => (load(path)?, json!({ "file": path })),
        None => {
            // closed string with the same p, beta and grid
            let closed = SolverConfig {
                equation: Equation::Closed,
                record_iterates: 0,
                ..cfg.solver
            };
            let sol = solve_closed(&closed)?;
            summary.push(converged_line("psi0", &sol));
            (
                sol.profile.clone(),
                json!({ "solved": solution_summary(&sol), "flags": flags(&sol) }),
            )
        }
    };
    let sol = solve_open_closed(&cfg.solver, &psi0)?;
    info!("open-closed string solved in {} iterations", sol.chi.trace.iters_used);
    out.profile("psi0", "psi0.csv", &psi0)?;
    out.profile("v", "v.csv", &sol.weight.v)?;
    out.profile("chi", "chi.csv", &sol.chi.profile)?;
    out.profile("profile", "profile.csv", &sol.phi)?;
    write_iterates(out, "chi_", &sol.chi)?;
    summary.push(converged_line("chi", &sol.chi));
    let chi = &sol.chi.profile;
    let chi_slope = sol.weight.chi_operator().slope_at(chi.half_values(), 0.0);
    Ok(Outcome {
        flags: flags(&sol.chi),
        summary,
        result: json!({
            "psi0": psi0_source,
            "weight": {
                "norm": sol.weight.norm,
                "chi_bound": sol.weight.chi_bound(p),
                "singular_zeros": sol.weight.zeros,
            },
            "solution": solution_summary(&sol.chi),
            "analysis": {
                "chi_zeros": zeros_with_exponents(chi, f64::from(p)),
                "phi_zeros": zeros_with_exponents(&sol.phi, f64::from(p)),
                "chi_power_slope_at_zero": chi_slope,
                "chi_max_abs": chi.max_abs(),
                "sandwich": fallible(sandwich_report(&sol.chi.trace, p)),
                "bounds": fallible(bound_report(&sol.phi, Some((&sol.weight, p)))),
            },
        }),
    })
}

fn run_analyze(cfg: &RunConfig, _out: &mut Output) -> CliResult<Outcome> {
    let path = cfg
        .input
        .as_ref()
        .ok_or_else(|| CliError::Option("analyze needs --input <profile.csv>".into()))?;
    let phi = load(path)?;
    let p = cfg.solver.p;
    if p < 2 {
        return Err(tachyon_core::Error::Config(format!("p must be at least 2, got {p}")).into());
    }
    let analysis = match phi.parity() {
        Some(Parity::Odd) => open_analysis(&phi, p),
        Some(Parity::Even) => closed_analysis(&phi, p),
        None => json!({
            "zeros": zeros_with_exponents(&phi, f64::from(p)),
            "sign_changes": sign_change_count(&phi),
            "bounds": fallible(bound_report(&phi, None)),
        }),
    };
    Ok(Outcome {
        flags: Vec::new(),
        summary: vec![format!("analyzed {} ({} nodes)", path.display(), phi.grid().n_points())],
        result: json!({ "input": path, "parity": phi.parity(), "analysis": analysis }),
    })
}

fn run_branching(cfg: &RunConfig, out: &mut Output) -> CliResult<Outcome> {
    let boundary = HeatPolynomial64::new(cfg.boundary.clone())?;
    let report = branching_analysis(&boundary, &cfg.epsilons)?;
    let rows: Vec<Vec<String>> = report
        .epsilons
        .iter()
        .zip(&report.zero_sets)
        .flat_map(|(e, zs)| zs.iter().map(move |z| vec![f(*e), f(*z), f(z / e.sqrt())]))
        .collect();
    out.table(
        "zeros",
        "branching_zeros.csv",
        &["epsilon".into(), "zero".into(), "zero_over_sqrt_epsilon".into()],
        &rows,
    )?;
    Ok(Outcome {
        flags: Vec::new(),
        summary: vec![format!(
            "branching: {} pair(s), fitted exponent {:.6}",
            report.pairs, report.fitted_exponent
        )],
        result: json!({ "branching": report }),
    })
}

fn run_reproduce(cfg: &RunConfig, out: &mut Output) -> CliResult<Outcome> {
    let rows = reproduce_examples(cfg.solver.grid)?;
    let header: Vec<String> = [
        "beta",
        "psi1_center_computed",
        "psi1_center_reference",
        "t0_computed",
        "t0_reference",
        "center_error",
        "t0_error",
        "within_tolerance",
        "note",
    ]
    .map(String::from)
    .to_vec();
    let note = |suspect: bool| if suspect { "reference-typo-suspected" } else { "" };
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                f(r.beta),
                f(r.psi1_center_computed),
                f(r.psi1_center_reference),
                f(r.t0_computed),
                f(r.t0_reference),
                f(r.center_error),
                f(r.t0_error),
                r.within_tolerance.to_string(),
                note(r.reference_sign_discrepancy).to_string(),
            ]
        })
        .collect();
    out.table("table", "reproduce_examples.csv", &header, &table)?;
    let mut summary = vec![format!(
        "{:>5} {:>10} {:>10} {:>8} {:>8} {:>10} {:>8}  note",
        "beta", "psi1(0)", "ref", "t0", "ref", "|d psi1|", "|d t0|"
    )];
    summary.extend(rows.iter().map(|r| {
        format!(
            "{:>5} {:>10.4} {:>10.3} {:>8.3} {:>8.2} {:>10.1e} {:>8.1e}  {}",
            r.beta,
            r.psi1_center_computed,
            r.psi1_center_reference,
            r.t0_computed,
            r.t0_reference,
            r.center_error,
            r.t0_error,
            note(r.reference_sign_discrepancy)
        )
    }));
    let all = rows.iter().all(|r| r.within_tolerance);
    Ok(Outcome {
        flags: Vec::new(),
        summary,
        result: json!({ "rows": rows, "all_within_tolerance": all }),
    })
}
