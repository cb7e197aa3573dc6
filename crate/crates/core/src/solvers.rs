//! Successive approximation for the open, closed and open-closed equations.
//!
//! * open: `phi^p = K_1 phi`, tails `(-1, 1)`, iterated from `sgn t`;
//! * closed: `psi^(p^2) = K_2 psi`, tails `(1, 1)`, iterated from
//!   `psi_0 = 1 - beta exp(-alpha t^2)`;
//! * open-closed: `chi^p = K_1(v chi)` with `v = psi_0^(-(p-1)/2)` built from
//!   a closed-string profile, iterated from `sgn t`; then `phi = chi v`.
//!
//! Every scheme runs on the half line through a [`SymmetricOperator`], so the
//! parity of the iterates is exact.

use std::fmt;
use std::str::FromStr;

use log::{debug, warn};
use serde::Serialize;

use crate::analysis::{self, ZeroInfo};
use crate::error::{Error, Result};
use crate::kernel::{apply_kernel_auto, KernelParams, SymmetricOperator};
use crate::profile::{sample, sgn, Grid, Parity, Profile, TailModel};
use crate::quadrature::{self, QuadPoint};
use crate::scalar::{odd_root, signed_pow, Real};

pub const DEFAULT_P: u32 = 3;
pub const DEFAULT_ALPHA: f64 = 0.1;
pub const DEFAULT_BETA: f64 = 2.0;
pub const DEFAULT_MAX_ITERS: usize = 200;
pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_HALF_WIDTH: f64 = 10.0;
pub const DEFAULT_POINTS: usize = 2001;

/// Initial-guess depths for which closed-string solution families are documented.
pub const REFERENCE_BETA_RANGE: (f64, f64) = (1.5, 2.0);

/// Argument tolerance when locating zeros of the pre-root kernel output.
const ZERO_ARG_TOL: f64 = 1e-12;

/// Nodes closer than this many steps to a zero of `psi_0` use the local model of `v`.
const SINGULAR_REACH: f64 = 2.0;

/// Nodes on each side of a zero used to fit the slope of the local model.
const SLOPE_WINDOW: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Equation {
    Open,
    Closed,
    OpenClosed,
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Equation::Open => "open",
            Equation::Closed => "closed",
            Equation::OpenClosed => "open-closed",
        })
    }
}

impl FromStr for Equation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "open" => Ok(Equation::Open),
            "closed" => Ok(Equation::Closed),
            "open-closed" | "open_closed" => Ok(Equation::OpenClosed),
            other => Err(Error::Config(format!("unknown equation '{other}'"))),
        }
    }
}

/// Conditions attached to a run that are not errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Flag {
    /// No convergence proof covers this scheme; convergence is observed, not guaranteed.
    HeuristicConvergence,
    /// An even power was run through `force`.
    ForcedEvenPower,
    /// `beta` lies outside [`REFERENCE_BETA_RANGE`].
    BetaOutsideReferenceRange,
}

impl fmt::Display for Flag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Flag::HeuristicConvergence => "heuristic-convergence",
            Flag::ForcedEvenPower => "forced-even-power",
            Flag::BetaOutsideReferenceRange => "beta-outside-reference-range",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverConfig<S> {
    pub equation: Equation,
    pub p: u32,
    /// Width of the closed-string initial guess.
    pub alpha: S,
    /// Depth of the closed-string initial guess (`psi_0(0) = 1 - beta`); must exceed 1.
    pub beta: S,
    pub grid: Grid<S>,
    pub max_iters: usize,
    /// Convergence threshold on the sup-norm of successive differences.
    pub tol: S,
    /// Number of leading iterates (starting with iterate 0) kept in the solution.
    pub record_iterates: usize,
    /// Run even powers instead of rejecting them.
    pub force: bool,
}

impl<S: Real> SolverConfig<S> {
    pub fn new(equation: Equation, p: u32) -> Self {
        SolverConfig {
            equation,
            p,
            alpha: S::lit(DEFAULT_ALPHA),
            beta: S::lit(DEFAULT_BETA),
            grid: Grid::new(S::lit(DEFAULT_HALF_WIDTH), DEFAULT_POINTS).expect("default grid is valid"),
            max_iters: DEFAULT_MAX_ITERS,
            tol: S::lit(DEFAULT_TOL),
            record_iterates: 0,
            force: false,
        }
    }

    /// Checks the configuration and returns the flags the run will carry.
    pub fn validate(&self) -> Result<Vec<Flag>> {
        let mut flags = self.validate_scheme()?;
        if self.equation == Equation::Closed {
            if self.beta.is_nan() || self.beta <= S::one() {
                return Err(Error::DegenerateGuess(format!(
                    "beta = {} keeps psi_0 nonnegative; the iteration collapses to psi = 1",
                    self.beta
                )));
            }
            let (lo, hi) = REFERENCE_BETA_RANGE;
            if self.beta < S::lit(lo) || self.beta > S::lit(hi) {
                warn!("beta = {} lies outside [{lo}, {hi}]", self.beta);
                flags.push(Flag::BetaOutsideReferenceRange);
            }
        }
        Ok(flags)
    }

    /// Validation that does not involve the default initial guess.
    fn validate_scheme(&self) -> Result<Vec<Flag>> {
        if self.p < 2 {
            return Err(Error::Config(format!("p must be at least 2, got {}", self.p)));
        }
        if self.p > 15 {
            return Err(Error::Config(format!("p = {} is too large (p^2 must stay below 256)", self.p)));
        }
        if !(self.tol.is_finite() && self.tol > S::zero()) {
            return Err(Error::Config(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be positive".into()));
        }
        if self.record_iterates > self.max_iters + 1 {
            return Err(Error::Config(format!(
                "record_iterates = {} exceeds max_iters + 1 = {}",
                self.record_iterates,
                self.max_iters + 1
            )));
        }
        if !(self.alpha.is_finite() && self.alpha > S::zero()) {
            return Err(Error::Config(format!("alpha must be positive, got {}", self.alpha)));
        }
        let mut flags = Vec::new();
        if self.p.is_multiple_of(2) {
            let reason = match self.equation {
                Equation::Open => "no continuous solutions exist for even p",
                Equation::Closed => "there are no continuous even solutions for even p",
                Equation::OpenClosed => "the scheme requires p = 1 (mod 4)",
            };
            if !self.force {
                return Err(Error::EvenPower {
                    p: self.p,
                    equation: self.equation,
                    reason,
                });
            }
            warn!("running even p = {} because force is set", self.p);
            flags.push(Flag::ForcedEvenPower);
        }
        match self.equation {
            Equation::Closed => flags.push(Flag::HeuristicConvergence),
            Equation::OpenClosed if self.p % 4 != 1 => flags.push(Flag::HeuristicConvergence),
            _ => {}
        }
        Ok(flags)
    }

    fn expect_equation(&self, equation: Equation) -> Result<()> {
        if self.equation != equation {
            return Err(Error::Config(format!(
                "configuration is for the {} equation, not {equation}",
                self.equation
            )));
        }
        Ok(())
    }
}

/// Per-iteration record of a solve. Entry `n - 1` describes iterate `n`.
#[derive(Debug, Clone, Default, Serialize)]
pub struct IterationTrace<S> {
    /// `sup |u_n - u_(n-1)|`.
    pub deltas: Vec<S>,
    /// `u_n(0)`.
    pub center_values: Vec<S>,
    /// Zeros of the pre-root kernel output, i.e. of `u_n`, ascending.
    pub zero_locations: Vec<Vec<S>>,
    /// `max u_n / u_(n-1)` over `t > 0` (odd schemes only).
    pub ratio_max: Vec<S>,
    /// `min u_n / u_(n-1)` over `t > 0` (odd schemes only).
    pub ratio_min: Vec<S>,
    pub converged: bool,
    pub iters_used: usize,
}

#[derive(Debug, Clone)]
pub struct Solution<S> {
    pub profile: Profile<S>,
    pub trace: IterationTrace<S>,
    /// Leading iterates, starting with the initial guess.
    pub iterates: Vec<Profile<S>>,
    /// `sup |u^k - K u|` at the nodes, with the solver's own quadrature.
    pub residual: S,
    pub flags: Vec<Flag>,
}

/// `sign(y)·|y|^(1/k)`; for even `k` a negative `y` has no real root.
pub fn signed_root<S: Real>(y: S, k: u32) -> Result<S> {
    root_at(y, k, S::nan())
}

fn root_at<S: Real>(y: S, k: u32, t: S) -> Result<S> {
    if k == 0 {
        return Err(Error::Domain("root index must be positive".into()));
    }
    if k.is_multiple_of(2) && y < S::zero() {
        return Err(Error::NonRealRoot {
            k,
            value: y.to_f64().unwrap_or(f64::NAN),
            t: t.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(odd_root(y, k))
}

/// Roots of a half-line output; for even `k`, scans the full line in ascending `t`.
fn root_step<S: Real>(pre: &[S], k: u32, parity: Parity, grid: &Grid<S>) -> Result<Vec<S>> {
    if k.is_multiple_of(2) {
        let s: S = parity.sign();
        for j in (1..pre.len()).rev() {
            root_at(s * pre[j], k, -grid.half_node(j))?;
        }
        for (j, &y) in pre.iter().enumerate() {
            root_at(y, k, grid.half_node(j))?;
        }
    }
    Ok(pre.iter().map(|&y| odd_root(y, k)).collect())
}

/// One fixed-point scheme `u <- (op u + c)^(1/power)`, `c` only on the first step.
struct Scheme<'a, S> {
    op: &'a SymmetricOperator<S>,
    power: u32,
    first_correction: Option<&'a dyn Fn(S) -> S>,
}

fn run<S: Real>(cfg: &SolverConfig<S>, scheme: Scheme<'_, S>, start: &Profile<S>, flags: Vec<Flag>) -> Result<Solution<S>> {
    let op = scheme.op;
    let grid = *op.grid();
    let parity = op.parity();
    let tails = op.tails();
    let mut half = start.half_values().to_vec();
    let mut trace = IterationTrace::default();
    let mut iterates = Vec::with_capacity(cfg.record_iterates);
    if cfg.record_iterates > 0 {
        iterates.push(start.clone());
    }
    let mut last_delta = S::infinity();
    for iter in 1..=cfg.max_iters {
        let correction = if iter == 1 { scheme.first_correction } else { None };
        let mut pre = op.apply_half(&half);
        if let Some(c) = correction {
            for (j, v) in pre.iter_mut().enumerate() {
                *v += c(grid.half_node(j));
            }
        }
        let zeros = pre_root_zeros(op, &half, &pre, correction);
        let next = root_step(&pre, scheme.power, parity, &grid)?;
        last_delta = next
            .iter()
            .zip(&half)
            .fold(S::zero(), |acc, (a, b)| acc.max((*a - *b).abs()));
        if parity == Parity::Odd {
            let (mut hi, mut lo) = (S::neg_infinity(), S::infinity());
            for (a, b) in next.iter().zip(&half).skip(1) {
                if *b != S::zero() {
                    let r = *a / *b;
                    hi = hi.max(r);
                    lo = lo.min(r);
                }
            }
            trace.ratio_max.push(hi);
            trace.ratio_min.push(lo);
        }
        trace.deltas.push(last_delta);
        trace.center_values.push(next[0]);
        trace.zero_locations.push(zeros);
        trace.iters_used = iter;
        half = next;
        if iterates.len() < cfg.record_iterates {
            iterates.push(Profile::from_half(grid, &half, tails, parity)?);
        }
        debug!("iteration {iter}: delta = {last_delta:e}");
        if last_delta <= cfg.tol {
            trace.converged = true;
            break;
        }
    }
    if !trace.converged {
        return Err(Error::MaxItersExceeded {
            iters: cfg.max_iters,
            last_delta: last_delta.to_f64().unwrap_or(f64::NAN),
        });
    }
    let exp = i32::try_from(scheme.power).expect("power is bounded by validation");
    let image = op.apply_half(&half);
    let residual = half
        .iter()
        .zip(&image)
        .fold(S::zero(), |acc, (u, k)| acc.max((u.powi(exp) - *k).abs()));
    Ok(Solution {
        profile: Profile::from_half(grid, &half, tails, parity)?,
        trace,
        iterates,
        residual,
        flags,
    })
}

/// Zeros of the pre-root output on the whole line, refined by bisection.
fn pre_root_zeros<S: Real>(
    op: &SymmetricOperator<S>,
    half: &[S],
    pre: &[S],
    correction: Option<&dyn Fn(S) -> S>,
) -> Vec<S> {
    let grid = op.grid();
    let f = |t: S| op.eval_at(half, t) + correction.map_or(S::zero(), |c| c(t));
    let mut positive = Vec::new();
    let mut at_center = pre[0] == S::zero();
    for j in 0..pre.len() - 1 {
        let (a, b) = (pre[j], pre[j + 1]);
        if b == S::zero() {
            positive.push(grid.half_node(j + 1));
        } else if a != S::zero() && (a < S::zero()) != (b < S::zero()) {
            positive.push(bisect(&f, grid.half_node(j), grid.half_node(j + 1), a));
        } else if j == 0 && a == S::zero() {
            at_center = true;
        }
    }
    let mut out: Vec<S> = positive.iter().rev().map(|&z| -z).collect();
    if at_center {
        out.push(S::zero());
    }
    out.extend(positive);
    out
}

fn bisect<S: Real>(f: &impl Fn(S) -> S, mut a: S, mut b: S, mut fa: S) -> S {
    let tol = S::lit(ZERO_ARG_TOL);
    while b - a > tol {
        let mid = (a + b) * S::lit(0.5);
        if mid <= a || mid >= b {
            break;
        }
        let fm = f(mid);
        if fm == S::zero() {
            return mid;
        }
        if (fm < S::zero()) == (fa < S::zero()) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    (a + b) * S::lit(0.5)
}

fn require_on_grid<S: Real>(cfg: &SolverConfig<S>, profile: &Profile<S>) -> Result<()> {
    if !cfg.grid.same_as(profile.grid()) {
        return Err(Error::Grid("profile grid differs from the configured grid".into()));
    }
    Ok(())
}

fn with_parity<S: Real>(profile: &Profile<S>, parity: Parity) -> Result<Profile<S>> {
    if profile.parity() == Some(parity) {
        Ok(profile.clone())
    } else {
        profile.with_parity(Some(parity))
    }
}

/// `sgn t` with tails `(-1, 1)`.
pub fn open_initial_guess<S: Real>(grid: &Grid<S>) -> Profile<S> {
    sample(sgn, grid, TailModel::open_odd(), Some(Parity::Odd)).expect("sign function is finite and odd")
}

/// `1 - beta exp(-alpha t^2)` with tails `(1, 1)`.
pub fn closed_initial_guess<S: Real>(grid: &Grid<S>, alpha: S, beta: S) -> Result<Profile<S>> {
    sample(
        |t| S::one() - beta * (-alpha * t * t).exp(),
        grid,
        TailModel::closed(),
        Some(Parity::Even),
    )
}

/// Open string from `sgn t`.
pub fn solve_open<S: Real>(cfg: &SolverConfig<S>) -> Result<Solution<S>> {
    solve_open_from(cfg, &open_initial_guess(&cfg.grid))
}

/// Open string from an arbitrary odd starting profile.
pub fn solve_open_from<S: Real>(cfg: &SolverConfig<S>, start: &Profile<S>) -> Result<Solution<S>> {
    cfg.expect_equation(Equation::Open)?;
    let flags = cfg.validate()?;
    require_on_grid(cfg, start)?;
    let start = with_parity(start, Parity::Odd)?;
    let op = SymmetricOperator::new(KernelParams::open(), cfg.grid, Parity::Odd, start.tails());
    let scheme = Scheme {
        op: &op,
        power: cfg.p,
        first_correction: None,
    };
    run(cfg, scheme, &start, flags)
}

/// `K_gamma` of `-beta exp(-alpha tau^2)` restricted to `|tau| > T`, in closed form.
///
/// The sampled initial guess carries tails `(1, 1)`, so this is the part of
/// the first closed-string step that the grid quadrature cannot see.
fn gaussian_tail_image<S: Real>(alpha: S, beta: S, gamma: S, big_t: S) -> impl Fn(S) -> S {
    move |t: S| {
        let s = alpha + gamma;
        let half = S::lit(0.5);
        let one_side = |x: S| {
            let c = gamma * x / s;
            (-(alpha * gamma * x * x) / s).exp() * (S::PI() / s).sqrt() * half * (s.sqrt() * (big_t - c)).erfc()
        };
        -beta * (gamma / S::PI()).sqrt() * (one_side(t) + one_side(-t))
    }
}

/// Closed string from `1 - beta exp(-alpha t^2)`.
pub fn solve_closed<S: Real>(cfg: &SolverConfig<S>) -> Result<Solution<S>> {
    cfg.expect_equation(Equation::Closed)?;
    let flags = cfg.validate()?;
    let start = closed_initial_guess(&cfg.grid, cfg.alpha, cfg.beta)?;
    let kernel = KernelParams::closed();
    let op = SymmetricOperator::new(kernel, cfg.grid, Parity::Even, TailModel::closed());
    let tail = gaussian_tail_image(cfg.alpha, cfg.beta, kernel.gamma(), cfg.grid.half_width());
    let scheme = Scheme {
        op: &op,
        power: cfg.p * cfg.p,
        first_correction: Some(&tail),
    };
    run(cfg, scheme, &start, flags)
}

/// A single closed-string step from `1 - beta exp(-alpha t^2)`.
///
/// The returned solution holds `psi_1`; its trace has one entry (centre
/// value and zeros of `psi_1`). The residual is that of `psi_1`.
pub fn closed_first_step<S: Real>(cfg: &SolverConfig<S>) -> Result<Solution<S>> {
    let one_step = SolverConfig {
        max_iters: 1,
        tol: S::max_value(),
        record_iterates: cfg.record_iterates.min(2),
        ..*cfg
    };
    solve_closed(&one_step)
}

/// Closed string from an arbitrary even starting profile.
pub fn solve_closed_from<S: Real>(cfg: &SolverConfig<S>, start: &Profile<S>) -> Result<Solution<S>> {
    cfg.expect_equation(Equation::Closed)?;
    let flags = cfg.validate_scheme()?;
    require_on_grid(cfg, start)?;
    let start = with_parity(start, Parity::Even)?;
    let op = SymmetricOperator::new(KernelParams::closed(), cfg.grid, Parity::Even, start.tails());
    let scheme = Scheme {
        op: &op,
        power: cfg.p * cfg.p,
        first_correction: None,
    };
    run(cfg, scheme, &start, flags)
}

/// `psi_1(t) = [1 - beta sqrt(2/(alpha+2)) exp(-2 alpha t^2/(alpha+2))]^(1/p^2)`.
pub fn closed_first_iterate<S: Real>(alpha: S, beta: S, p: u32, t: S) -> Result<S> {
    let two = S::lit(2.0);
    let s = alpha + two;
    let y = S::one() - beta * (two / s).sqrt() * (-two * alpha * t * t / s).exp();
    root_at(y, p * p, t)
}

/// Local model `v(t) ≈ |a (t - t0)|^(-e)` near a zero `t0 >= 0` of `psi_0`.
#[derive(Debug, Clone, Serialize)]
pub struct SingularZero<S> {
    pub location: S,
    /// `|a|`.
    pub slope: S,
    /// Multiplicity `sigma` of the zero of `psi_0^(p^2)`.
    pub multiplicity: u32,
    /// `e = sigma (p - 1) / (2 p^2)`.
    pub exponent: S,
    /// Half-line cells `[t_c, t_(c+1)]` integrated with the model.
    pub cells: Vec<usize>,
    #[serde(skip)]
    sign_left: S,
    #[serde(skip)]
    sign_right: S,
}

impl<S: Real> SingularZero<S> {
    /// Model value at `t`.
    pub fn value(&self, t: S) -> S {
        let u = t - self.location;
        let s = if u < S::zero() { self.sign_left } else { self.sign_right };
        s * (self.slope * u.abs()).powf(-self.exponent)
    }

    /// `∫ v_model` over `[a, b]`, optionally of `|v_model|`.
    fn integral(&self, a: S, b: S, absolute: bool) -> S {
        let e = self.exponent;
        let prim = |u: S| {
            let mag = u.abs().powf(S::one() - e) * self.slope.powf(-e) / (S::one() - e);
            if u < S::zero() {
                -mag
            } else {
                mag
            }
        };
        let (sl, sr) = if absolute {
            (S::one(), S::one())
        } else {
            (self.sign_left, self.sign_right)
        };
        let (ua, ub) = (a - self.location, b - self.location);
        if ua >= S::zero() {
            sr * (prim(ub) - prim(ua))
        } else if ub <= S::zero() {
            sl * (prim(ub) - prim(ua))
        } else {
            sl * (-prim(ua)) + sr * prim(ub)
        }
    }
}

/// The weight `v = psi_0^(-(p-1)/2)` with its quadrature on the half line.
#[derive(Debug, Clone)]
pub struct SingularWeight<S> {
    pub v: Profile<S>,
    pub zeros: Vec<SingularZero<S>>,
    /// `N = 1 + (2/sqrt pi) ∫_0^inf (|v| - 1)`.
    pub norm: S,
    rule: Vec<QuadPoint<S>>,
}

impl<S: Real> SingularWeight<S> {
    /// `chi -> K_1(v chi)` on odd profiles with tails `(-1, 1)`.
    pub fn chi_operator(&self) -> SymmetricOperator<S> {
        SymmetricOperator::with_weighted_rule(
            KernelParams::open(),
            *self.v.grid(),
            Parity::Odd,
            TailModel::open_odd(),
            self.rule.clone(),
        )
    }

    /// `N^(1/(p-1))`, the bound on `|chi|`.
    pub fn chi_bound(&self, p: u32) -> S {
        self.norm.powf(S::one() / S::from_u32(p - 1).expect("small integer"))
    }
}

/// Builds `v = psi_0^(-(p-1)/2)` from an even profile.
///
/// Zeros of `psi_0` are located with [`analysis::find_zeros`]; their
/// multiplicity `sigma` is read from the fitted local exponent `sigma/p^2`
/// and must satisfy `sigma < 2p^2/(p-1)`. Simpson panels touching a cell
/// within two steps of a zero are replaced by the exactly integrated local
/// model, with `chi` taken at the cell midpoint.
pub fn build_v<S: Real>(psi0: &Profile<S>, p: u32) -> Result<SingularWeight<S>> {
    if p < 2 {
        return Err(Error::Config(format!("p must be at least 2, got {p}")));
    }
    let psi0 = with_parity(psi0, Parity::Even)?;
    let grid = *psi0.grid();
    let h = grid.step();
    let m = grid.half_count();
    let half = psi0.half_values();
    let pf = S::from_u32(p).expect("small integer");
    let p2 = pf * pf;
    let power = (pf - S::one()) / S::lit(2.0);
    let odd_power = p % 4 == 3;
    let v_sign = |s: S| if odd_power { s } else { S::one() };
    let limit = S::lit(2.0) * p2 / (pf - S::one());
    let reach = S::lit(SINGULAR_REACH) * h;

    let found: Vec<ZeroInfo<S>> = analysis::find_zeros(&psi0, S::lit(analysis::DEFAULT_ZERO_TOL))
        .into_iter()
        .filter(|z| z.location >= S::zero())
        .collect();
    let mut zeros = Vec::with_capacity(found.len());
    let mut cell_owner: Vec<Option<usize>> = vec![None; m];
    for z in &found {
        let sigma_f = (p2 * z.local_exponent).round().max(S::one());
        let sigma = sigma_f.to_u32().unwrap_or(u32::MAX);
        if sigma_f >= limit {
            return Err(Error::MultiplicityViolation {
                location: z.location.to_f64().unwrap_or(f64::NAN),
                sigma,
                limit: limit.to_f64().unwrap_or(f64::NAN),
            });
        }
        let q = sigma_f / p2;
        let slope = fit_slope(&psi0, z.location, q);
        let sign_left = v_sign(sgn(psi0.evaluate(z.location - h)));
        let sign_right = v_sign(sgn(psi0.evaluate(z.location + h)));
        let index = zeros.len();
        let mut cells = Vec::new();
        for (c, owner) in cell_owner.iter_mut().enumerate() {
            let (a, b) = (grid.half_node(c), grid.half_node(c + 1));
            let dist = if z.location < a {
                a - z.location
            } else if z.location > b {
                z.location - b
            } else {
                S::zero()
            };
            if dist <= reach {
                if owner.is_some() {
                    return Err(Error::Window(format!(
                        "zeros of psi_0 near t = {} are closer than {} steps",
                        z.location,
                        2.0 * SINGULAR_REACH
                    )));
                }
                *owner = Some(index);
                cells.push(c);
            }
        }
        zeros.push(SingularZero {
            location: z.location,
            slope,
            multiplicity: sigma,
            exponent: sigma_f * (pf - S::one()) / (S::lit(2.0) * p2),
            cells,
            sign_left,
            sign_right,
        });
    }

    // Node values: the local model near zeros, the plain power elsewhere.
    let v_half: Vec<S> = (0..=m)
        .map(|j| {
            let t = grid.half_node(j);
            match zeros.iter().find(|z| (t - z.location).abs() <= reach) {
                Some(z) => {
                    let u = (t - z.location).abs().max(h / S::lit(4.0));
                    let tt = if t < z.location { z.location - u } else { z.location + u };
                    z.value(tt)
                }
                None => signed_pow(half[j], -power),
            }
        })
        .collect();
    let v_half: Vec<S> = if odd_power {
        v_half
    } else {
        v_half.into_iter().map(|v| v.abs()).collect()
    };

    // Regular Simpson weights with every panel touching a model cell removed.
    let mut weights = quadrature::half_line_weights(m, h);
    let mut model_cells: Vec<(usize, usize)> = Vec::new();
    for panel in quadrature::panels(m) {
        let owner = (panel.start..panel.start + panel.cells).find_map(|c| cell_owner[c]);
        if let Some(z) = owner {
            for (k, &c) in quadrature::panel_coefficients(panel.cells).iter().enumerate() {
                weights[panel.start + k] -= S::lit(c) * h;
            }
            model_cells.extend((panel.start..panel.start + panel.cells).map(|c| (c, z)));
        }
    }
    let mut rule = Vec::new();
    let mut mass = S::zero();
    for (j, (&w, &v)) in weights.iter().zip(&v_half).enumerate() {
        if w.abs() > S::epsilon() * h {
            mass += w * (v.abs() - S::one());
            if v != S::one() {
                rule.push(QuadPoint::node(j, grid.half_node(j), w * (v - S::one())));
            }
        }
    }
    let half_frac = S::lit(0.5);
    for &(c, zi) in &model_cells {
        let z = &zeros[zi];
        let (a, b) = (grid.half_node(c), grid.half_node(c + 1));
        mass += z.integral(a, b, true) - h;
        rule.push(QuadPoint {
            at: (a + b) * half_frac,
            weight: z.integral(a, b, false) - h,
            left: c,
            right: c + 1,
            frac: half_frac,
        });
    }
    let norm = S::one() + S::lit(2.0) / S::PI().sqrt() * mass;
    let v = Profile::from_half(grid, &v_half, TailModel::closed(), Parity::Even)?;
    Ok(SingularWeight { v, zeros, norm, rule })
}

/// `|a|` in `|psi_0| ≈ |a (t - t0)|^q`, by least squares of `|psi_0|^(1/q)` against `|t - t0|`.
fn fit_slope<S: Real>(psi0: &Profile<S>, location: S, q: S) -> S {
    let grid = psi0.grid();
    let h = grid.step();
    let centre = grid.nearest(location);
    let lo = centre.saturating_sub(SLOPE_WINDOW);
    let hi = (centre + SLOPE_WINDOW).min(grid.n_points() - 1);
    let (mut num, mut den) = (S::zero(), S::zero());
    for i in lo..=hi {
        let u = (grid.node(i) - location).abs();
        if u < h * S::lit(1e-6) {
            continue;
        }
        let g = psi0.values()[i].abs().powf(q.recip());
        num += g * u;
        den += u * u;
    }
    num / den
}

#[derive(Debug, Clone)]
pub struct OpenClosedSolution<S> {
    /// `phi = chi v`.
    pub phi: Profile<S>,
    pub chi: Solution<S>,
    pub weight: SingularWeight<S>,
}

/// Open-closed string: `chi^p = K_1(v chi)` from `sgn t`, then `phi = chi v`.
pub fn solve_open_closed<S: Real>(cfg: &SolverConfig<S>, psi0: &Profile<S>) -> Result<OpenClosedSolution<S>> {
    cfg.expect_equation(Equation::OpenClosed)?;
    let flags = cfg.validate()?;
    require_on_grid(cfg, psi0)?;
    let weight = build_v(psi0, cfg.p)?;
    let op = weight.chi_operator();
    let scheme = Scheme {
        op: &op,
        power: cfg.p,
        first_correction: None,
    };
    let chi = run(cfg, scheme, &open_initial_guess(&cfg.grid), flags)?;
    let values = chi
        .profile
        .values()
        .iter()
        .zip(weight.v.values())
        .map(|(c, v)| *c * *v)
        .collect();
    let phi = Profile::new(cfg.grid, values, TailModel::open_odd(), Some(Parity::Odd))?;
    Ok(OpenClosedSolution { phi, chi, weight })
}

/// `sup_i |phi_i^power · w_i - (K phi)_i|` with the profile's own quadrature.
///
/// `power` is `p` for the open equation and `p^2` for the closed one; for the
/// open-closed form pass `w = psi_0^(p(p-1)/2)`.
pub fn residual<S: Real>(phi: &Profile<S>, power: u32, kernel: &KernelParams<S>, weight: Option<&Profile<S>>) -> Result<S> {
    if let Some(w) = weight {
        if !w.grid().same_as(phi.grid()) {
            return Err(Error::Grid("weight and profile live on different grids".into()));
        }
    }
    let exp = i32::try_from(power).map_err(|_| Error::Domain(format!("power {power} too large")))?;
    let image = apply_kernel_auto(kernel, phi);
    Ok(phi
        .values()
        .iter()
        .zip(image.values())
        .enumerate()
        .fold(S::zero(), |acc, (i, (u, k))| {
            let w = weight.map_or(S::one(), |w| w.values()[i]);
            acc.max((u.powi(exp) * w - *k).abs())
        }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(equation: Equation, p: u32) -> SolverConfig<f64> {
        SolverConfig::new(equation, p)
    }

    #[test]
    fn signed_root_values() {
        assert!((signed_root(-0.46385f64, 9).unwrap() + 0.91820).abs() < 1e-4);
        assert_eq!(signed_root(1.0f64, 9).unwrap(), 1.0);
        assert_eq!(signed_root(-1.0f64, 9).unwrap(), -1.0);
        assert_eq!(signed_root(0.0f64, 4).unwrap(), 0.0);
        assert!(matches!(signed_root(-0.5f64, 4), Err(Error::NonRealRoot { k: 4, .. })));
    }

    #[test]
    fn validation_rules() {
        assert!(matches!(cfg(Equation::Open, 2).validate(), Err(Error::EvenPower { p: 2, .. })));
        assert!(matches!(cfg(Equation::Closed, 4).validate(), Err(Error::EvenPower { .. })));
        let mut c = cfg(Equation::Closed, 3);
        for beta in [0.0, -1.0, 1.0, f64::NAN] {
            c.beta = beta;
            assert!(matches!(c.validate(), Err(Error::DegenerateGuess(_))));
        }
        c.beta = 2.5;
        assert!(c.validate().unwrap().contains(&Flag::BetaOutsideReferenceRange));
        c.beta = 1.2;
        assert!(c.validate().unwrap().contains(&Flag::BetaOutsideReferenceRange));
        assert_eq!(cfg(Equation::Open, 3).validate().unwrap(), vec![]);
        assert!(cfg(Equation::OpenClosed, 3).validate().unwrap().contains(&Flag::HeuristicConvergence));
        assert!(cfg(Equation::OpenClosed, 5).validate().unwrap().is_empty());
        let mut forced = cfg(Equation::Open, 2);
        forced.force = true;
        assert_eq!(forced.validate().unwrap(), vec![Flag::ForcedEvenPower]);
    }

    #[test]
    fn first_iterate_formula() {
        assert!((closed_first_iterate(0.1f64, 1.9, 3, 0.0).unwrap() + 0.9826).abs() < 2e-3);
        assert!((closed_first_iterate(0.1f64, 2.0, 3, 0.0).unwrap() + 0.9945).abs() < 1e-3);
        assert_eq!(closed_first_iterate(0.3f64, 0.0, 3, 1.7).unwrap(), 1.0);
    }

    #[test]
    fn constant_one_is_a_closed_fixed_point() {
        let c = cfg(Equation::Closed, 3);
        let sol = solve_closed_from(&c, &Profile::constant(c.grid, 1.0)).unwrap();
        assert_eq!(sol.trace.iters_used, 1);
        assert!(sol.profile.values().iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn open_string_converges() {
        let sol = solve_open(&cfg(Equation::Open, 3)).unwrap();
        assert!(sol.trace.converged && sol.trace.iters_used < 60);
        assert!(sol.residual < 1e-9);
        assert_eq!(sol.trace.zero_locations.last().unwrap(), &vec![0.0]);
    }

    #[test]
    fn forced_even_closed_fails_on_first_negative_value() {
        let mut c = cfg(Equation::Closed, 2);
        c.force = true;
        match solve_closed(&c) {
            Err(Error::NonRealRoot { k: 4, value, t }) => {
                assert!(value < 0.0 && t < 0.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn open_closed_with_unit_weight_is_open() {
        let c = cfg(Equation::OpenClosed, 5);
        let one = Profile::constant(c.grid, 1.0);
        let oc = solve_open_closed(&c, &one).unwrap();
        let open = solve_open(&SolverConfig { equation: Equation::Open, ..c }).unwrap();
        assert!(oc.weight.zeros.is_empty());
        assert!((oc.weight.norm - 1.0).abs() < 1e-15);
        let d = crate::profile::sup_diff(&oc.phi, &open.profile).unwrap();
        assert!(d < 1e-12, "{d}");
    }
}
