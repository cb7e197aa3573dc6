//! Diagnostics for computed solutions: zeros and local exponents,
//! conservation and partial-mass checks, tail decay, the zero-branching law
//! for heat polynomials, bounds, the derivative identity and the sandwich
//! contraction of open-closed iterates.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hermite::hermite_roots;
use crate::kernel::{heat_interpolate, KernelParams, SymmetricOperator};
use crate::polynomial::HeatPolynomial;
use crate::profile::{Parity, Profile};
use crate::quadrature::trapezoid;
use crate::scalar::Real;
use crate::solvers::{signed_root, IterationTrace, SingularWeight};

pub const DEFAULT_ZERO_TOL: f64 = 1e-9;

/// Nodes on each side of a zero used by exponent fits.
pub const DEFAULT_WINDOW: usize = 4;

/// Largest distance of `power · exponent` from an integer for a resolved multiplicity.
const MULTIPLICITY_GAP: f64 = 0.2;

/// Deviations below this are treated as rounding noise in tail-decay fits.
const NOISE_FLOOR: f64 = 1e-13;

/// Fraction of the half width, counted from each end, used for tail-decay fits.
const TAIL_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroInfo<S> {
    pub location: S,
    /// True when the location comes from a converged power-law fit.
    pub refined: bool,
    /// Fitted `q` in `|f| ≈ c |t - location|^q`.
    pub local_exponent: S,
    pub sign_change: bool,
    /// `round(power · q)`, set by [`assign_multiplicity`].
    pub estimated_multiplicity: Option<u32>,
    /// False when `power · q` is further than 0.2 from an integer.
    pub resolved: bool,
}

/// Sign changes and touching zeros of a profile, in ascending order.
///
/// A zero between nodes is located from the local power law
/// `|f| ≈ c |t - z|^q`: with `q` fixed, the bracketing values give `z`
/// exactly; `q` is then refit on the nearest nodes and the two steps repeat
/// until `q` settles. A touching zero is a node where `|f| <= zero_tol` is a
/// strict local minimum without a sign change.
pub fn find_zeros<S: Real>(f: &Profile<S>, zero_tol: S) -> Vec<ZeroInfo<S>> {
    let v = f.values();
    let n = v.len();
    let grid = f.grid();
    let mut out = Vec::new();
    for i in 0..n {
        let t = grid.node(i);
        if v[i] == S::zero() {
            let sign_change = i > 0 && i + 1 < n && (v[i - 1] < S::zero()) != (v[i + 1] < S::zero())
                && v[i - 1] != S::zero()
                && v[i + 1] != S::zero();
            let q = node_exponent(f, i, DEFAULT_WINDOW).unwrap_or(S::one());
            out.push(ZeroInfo {
                location: t,
                refined: true,
                local_exponent: q,
                sign_change,
                estimated_multiplicity: None,
                resolved: true,
            });
            continue;
        }
        if i + 1 < n && v[i + 1] != S::zero() && (v[i] < S::zero()) != (v[i + 1] < S::zero()) {
            let (location, q, refined) = power_law_zero(f, i, DEFAULT_WINDOW);
            out.push(ZeroInfo {
                location,
                refined,
                local_exponent: q,
                sign_change: true,
                estimated_multiplicity: None,
                resolved: true,
            });
            continue;
        }
        if i > 0
            && i + 1 < n
            && v[i].abs() <= zero_tol
            && v[i].abs() < v[i - 1].abs()
            && v[i].abs() < v[i + 1].abs()
            && (v[i - 1] < S::zero()) == (v[i] < S::zero())
            && (v[i + 1] < S::zero()) == (v[i] < S::zero())
        {
            let q = node_exponent(f, i, DEFAULT_WINDOW).unwrap_or(S::one());
            out.push(ZeroInfo {
                location: t,
                refined: false,
                local_exponent: q,
                sign_change: false,
                estimated_multiplicity: None,
                resolved: true,
            });
        }
    }
    out
}

/// Sets `estimated_multiplicity = round(power · q)` (at least 1) and `resolved`.
pub fn assign_multiplicity<S: Real>(zeros: &mut [ZeroInfo<S>], power: S) {
    for z in zeros {
        let x = power * z.local_exponent;
        let sigma = x.round().max(S::one());
        z.estimated_multiplicity = sigma.to_u32();
        z.resolved = (x - sigma).abs() <= S::lit(MULTIPLICITY_GAP);
    }
}

/// Count of same-sign runs available from node `start` stepping by `dir`, up to `want`.
fn same_sign_run<S: Real>(v: &[S], start: usize, dir: isize, want: usize) -> usize {
    let s = v[start] < S::zero();
    let mut count = 0;
    let mut i = start as isize;
    while count < want && i >= 0 && (i as usize) < v.len() {
        let x = v[i as usize];
        if x == S::zero() || (x < S::zero()) != s {
            break;
        }
        count += 1;
        i += dir;
    }
    count
}

fn power_law_zero<S: Real>(f: &Profile<S>, j: usize, window: usize) -> (S, S, bool) {
    let v = f.values();
    let grid = f.grid();
    let (tj, tk) = (grid.node(j), grid.node(j + 1));
    let linear = tj - v[j] * (tk - tj) / (v[j + 1] - v[j]);
    let w = same_sign_run(v, j, -1, window).min(same_sign_run(v, j + 1, 1, window));
    if w < 2 {
        return (linear, S::one(), false);
    }
    let idx: Vec<usize> = (j + 1 - w..=j + w).collect();
    let mut q = S::one();
    for _ in 0..100 {
        let rho = (v[j].abs() / v[j + 1].abs()).powf(q.recip());
        let z = (tj + rho * tk) / (S::one() + rho);
        let (xs, ys): (Vec<S>, Vec<S>) = idx
            .iter()
            .map(|&i| ((grid.node(i) - z).abs().ln(), v[i].abs().ln()))
            .unzip();
        let qn = match slope(&xs, &ys) {
            Some(s) if s.is_finite() && s > S::zero() => s,
            _ => return (linear, S::one(), false),
        };
        if (qn - q).abs() < S::lit(1e-12) {
            let rho = (v[j].abs() / v[j + 1].abs()).powf(qn.recip());
            return ((tj + rho * tk) / (S::one() + rho), qn, true);
        }
        q = qn;
    }
    (linear, S::one(), false)
}

/// Exponent fit around a zero sitting on node `i`.
fn node_exponent<S: Real>(f: &Profile<S>, i: usize, window: usize) -> Option<S> {
    let v = f.values();
    let n = v.len();
    let grid = f.grid();
    let t0 = grid.node(i);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for k in 1..=window {
        for idx in [i.checked_sub(k), (i + k < n).then_some(i + k)].into_iter().flatten() {
            if v[idx] != S::zero() {
                xs.push((grid.node(idx) - t0).abs().ln());
                ys.push(v[idx].abs().ln());
            }
        }
    }
    slope(&xs, &ys).filter(|q| q.is_finite() && *q > S::zero())
}

/// Least-squares slope of `ys` against `xs`.
fn slope<S: Real>(xs: &[S], ys: &[S]) -> Option<S> {
    let (fit_slope, _) = line_fit(xs, ys)?;
    Some(fit_slope)
}

/// Least-squares line `(slope, intercept)`.
fn line_fit<S: Real>(xs: &[S], ys: &[S]) -> Option<(S, S)> {
    if xs.len() < 2 {
        return None;
    }
    let n = S::from_usize_lossy(xs.len());
    let mx = xs.iter().copied().sum::<S>() / n;
    let my = ys.iter().copied().sum::<S>() / n;
    let sxx: S = xs.iter().map(|x| (*x - mx) * (*x - mx)).sum();
    let sxy: S = xs.iter().zip(ys).map(|(x, y)| (*x - mx) * (*y - my)).sum();
    if sxx == S::zero() {
        return None;
    }
    let b = sxy / sxx;
    Some((b, my - b * mx))
}

/// Least-squares slope of `log|f|` against `log|t - location|` over `window`
/// nodes on each side of the zero.
pub fn estimate_exponent<S: Real>(f: &Profile<S>, z: &ZeroInfo<S>, window: usize) -> Result<S> {
    if window < 4 {
        return Err(Error::Window(format!("window must span at least 4 nodes, got {window}")));
    }
    let grid = f.grid();
    let v = f.values();
    let n = v.len();
    let right_start = (0..n).find(|&i| grid.node(i) > z.location);
    let left_start = (0..n).rev().find(|&i| grid.node(i) < z.location);
    let (Some(r), Some(l)) = (right_start, left_start) else {
        return Err(Error::Window("zero lies at the edge of the grid".into()));
    };
    if r + window > n || l + 1 < window {
        return Err(Error::Window(format!(
            "{window} nodes on each side of t = {} run past the grid",
            z.location
        )));
    }
    if same_sign_run(v, r, 1, window) < window || same_sign_run(v, l, -1, window) < window {
        return Err(Error::Window(format!(
            "window of {window} nodes around t = {} overlaps another zero",
            z.location
        )));
    }
    let (xs, ys): (Vec<S>, Vec<S>) = (l + 1 - window..=l)
        .chain(r..r + window)
        .map(|i| ((grid.node(i) - z.location).abs().ln(), v[i].abs().ln()))
        .unzip();
    slope(&xs, &ys).ok_or_else(|| Error::Window("degenerate window".into()))
}

/// Number of sign changes between consecutive nonzero node values.
pub fn sign_change_count<S: Real>(f: &Profile<S>) -> usize {
    let mut last: Option<bool> = None;
    let mut count = 0;
    for &x in f.values() {
        if x == S::zero() {
            continue;
        }
        let neg = x < S::zero();
        if last.is_some_and(|l| l != neg) {
            count += 1;
        }
        last = Some(neg);
    }
    count
}

#[derive(Debug, Clone, Serialize)]
pub struct ConservationReport<S> {
    /// `∫ (phi - phi^p) dt`.
    pub power_form: S,
    /// `(x, ∫ (phi - u(x, ·)) dt)`.
    pub values: Vec<(S, S)>,
}

impl<S: Real> ConservationReport<S> {
    pub fn max_abs(&self) -> S {
        self.values
            .iter()
            .fold(self.power_form.abs(), |acc, (_, v)| acc.max(v.abs()))
    }
}

/// Integrals of `phi - u(x, ·)` over the grid (the tails cancel).
pub fn conservation_check<S: Real>(phi: &Profile<S>, p: u32, xs: &[S]) -> Result<ConservationReport<S>> {
    let h = phi.grid().step();
    let exp = i32::try_from(p).map_err(|_| Error::Domain(format!("power {p} too large")))?;
    let diff: Vec<S> = phi.values().iter().map(|&v| v - v.powi(exp)).collect();
    let power_form = trapezoid(&diff, h);
    let mut values = Vec::with_capacity(xs.len());
    for &x in xs {
        let u = heat_interpolate(phi, x)?;
        let d: Vec<S> = phi.values().iter().zip(u.values()).map(|(a, b)| *a - *b).collect();
        values.push((x, trapezoid(&d, h)));
    }
    Ok(ConservationReport { power_form, values })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PartialMass<S> {
    pub x: S,
    pub a: S,
    /// `∫_(-inf)^a (u(x, t) - phi(t)) dt`.
    pub value: S,
    /// `sqrt(x / pi)`.
    pub bound: S,
}

impl<S: Real> PartialMass<S> {
    pub fn holds(&self) -> bool {
        self.value.abs() < self.bound
    }
}

pub fn partial_mass_bound<S: Real>(phi: &Profile<S>, x: S, a: S) -> Result<PartialMass<S>> {
    let u = heat_interpolate(phi, x)?;
    let grid = phi.grid();
    let h = grid.step();
    let d: Vec<S> = u.values().iter().zip(phi.values()).map(|(a, b)| *a - *b).collect();
    let value = if a <= -grid.half_width() {
        S::zero()
    } else if a >= grid.half_width() {
        trapezoid(&d, h)
    } else {
        let pos = (a + grid.half_width()) / h;
        let k = pos.floor().to_usize().unwrap_or(0).min(d.len() - 2);
        let frac = pos - S::from_usize_lossy(k);
        let whole = trapezoid(&d[..=k], h);
        let end = d[k] + (d[k + 1] - d[k]) * frac;
        whole + (d[k] + end) * S::lit(0.5) * frac * h
    };
    Ok(PartialMass {
        x,
        a,
        value,
        bound: (x / S::PI()).sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntegrabilityKind {
    OpenOdd,
    Closed,
}

#[derive(Debug, Clone, Serialize)]
pub struct IntegrabilityReport<S> {
    /// Exponent `k` in `∫ |1 - phi^k|`: `p - 1` (open) or `p^2 - 1` (closed).
    pub power: u32,
    pub power_deviation: S,
    /// `∫ |1 - |phi||`.
    pub abs_deviation: S,
    /// Fitted `c` in `|1 - |phi(t)|| ≈ C e^(-c|t|)` on the outer nodes; `None`
    /// when too few nodes lie above the noise floor.
    pub decay_left: Option<S>,
    pub decay_right: Option<S>,
}

impl<S: Real> IntegrabilityReport<S> {
    /// Both tails decay (a tail already at the noise floor counts as decayed).
    pub fn decays(&self) -> bool {
        [self.decay_left, self.decay_right]
            .iter()
            .all(|c| c.is_none_or(|c| c > S::zero()))
    }
}

pub fn integrability_report<S: Real>(phi: &Profile<S>, p: u32, kind: IntegrabilityKind) -> Result<IntegrabilityReport<S>> {
    let power = match kind {
        IntegrabilityKind::OpenOdd => p.saturating_sub(1),
        IntegrabilityKind::Closed => (p * p).saturating_sub(1),
    };
    let exp = i32::try_from(power).map_err(|_| Error::Domain(format!("power {power} too large")))?;
    let grid = phi.grid();
    let h = grid.step();
    let v = phi.values();
    let dev_pow: Vec<S> = v.iter().map(|x| (S::one() - x.powi(exp)).abs()).collect();
    let dev_abs: Vec<S> = v.iter().map(|x| (S::one() - x.abs()).abs()).collect();
    let cut = grid.half_width() * (S::one() - S::lit(TAIL_FRACTION));
    let fit = |right: bool| {
        let (xs, ys): (Vec<S>, Vec<S>) = grid
            .nodes()
            .zip(&dev_abs)
            .filter(|(t, d)| (if right { *t >= cut } else { *t <= -cut }) && **d > S::lit(NOISE_FLOOR))
            .map(|(t, d)| (t.abs(), d.ln()))
            .unzip();
        if xs.len() < 3 {
            None
        } else {
            slope(&xs, &ys).map(|s| -s)
        }
    };
    Ok(IntegrabilityReport {
        power,
        power_deviation: trapezoid(&dev_pow, h),
        abs_deviation: trapezoid(&dev_abs, h),
        decay_left: fit(false),
        decay_right: fit(true),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BranchReport<S> {
    pub epsilons: Vec<S>,
    /// All real zeros of the backward-evolved boundary, per epsilon.
    pub zero_sets: Vec<Vec<S>>,
    /// Number of positive zeros per epsilon.
    pub positive_counts: Vec<usize>,
    /// Half the multiplicity of the zero at the origin.
    pub pairs: usize,
    /// Mean over branches of the fitted slope of `log t_k` against `log epsilon`.
    pub fitted_exponent: S,
    pub fitted_exponents: Vec<S>,
    /// `t_k / sqrt(epsilon)` extrapolated to `epsilon -> 0`.
    pub fitted_coefficients: Vec<S>,
    /// `c_k / c_1`.
    pub coefficient_ratios: Vec<S>,
    /// Positive roots `mu_k` of `H_(2n)`, the expected coefficients.
    pub hermite_roots: Vec<S>,
    /// `2 mu_k`, the same roots for the heat equation `u_x = u_tt`.
    pub hermite_roots_doubled: Vec<S>,
    pub hermite_ratios: Vec<S>,
}

/// Tracks the zeros that branch out of an even-multiplicity zero at `t = 0`
/// when the boundary polynomial is evolved backward by each `epsilon`.
pub fn branching_analysis<S: Real>(boundary: &HeatPolynomial<S>, epsilons: &[S]) -> Result<BranchReport<S>> {
    let order = boundary
        .lowest_order()
        .ok_or_else(|| Error::Precondition("boundary polynomial is zero".into()))?;
    if order == 0 || order % 2 == 1 {
        return Err(Error::Precondition(format!(
            "boundary must have a zero of even multiplicity at t = 0, found order {order}"
        )));
    }
    if epsilons.len() < 2 {
        return Err(Error::Precondition("at least two epsilons are needed for a fit".into()));
    }
    if epsilons.iter().any(|e| !(*e > S::zero() && e.is_finite()))
        || epsilons.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(Error::Precondition("epsilons must be positive and strictly decreasing".into()));
    }
    let pairs = order / 2;
    let mut zero_sets = Vec::with_capacity(epsilons.len());
    let mut positive_counts = Vec::with_capacity(epsilons.len());
    let mut branches: Vec<Vec<S>> = vec![Vec::with_capacity(epsilons.len()); pairs];
    for &eps in epsilons {
        let roots = boundary.evolve(-eps).real_roots(S::zero());
        let positive: Vec<S> = roots.iter().copied().filter(|r| *r > S::zero()).collect();
        if positive.len() < pairs {
            return Err(Error::Precondition(format!(
                "only {} positive zeros at epsilon = {eps}, expected {pairs}",
                positive.len()
            )));
        }
        for (k, b) in branches.iter_mut().enumerate() {
            b.push(positive[k]);
        }
        positive_counts.push(positive.len());
        zero_sets.push(roots);
    }
    let log_eps: Vec<S> = epsilons.iter().map(|e| e.ln()).collect();
    let sqrt_eps: Vec<S> = epsilons.iter().map(|e| e.sqrt()).collect();
    let mut fitted_exponents = Vec::with_capacity(pairs);
    let mut fitted_coefficients = Vec::with_capacity(pairs);
    for b in &branches {
        let logs: Vec<S> = b.iter().map(|t| t.ln()).collect();
        fitted_exponents.push(slope(&log_eps, &logs).expect("distinct epsilons"));
        let scaled: Vec<S> = b.iter().zip(&sqrt_eps).map(|(t, s)| *t / *s).collect();
        let (_, intercept) = line_fit(&sqrt_eps, &scaled).expect("distinct epsilons");
        fitted_coefficients.push(intercept);
    }
    let fitted_exponent = fitted_exponents.iter().copied().sum::<S>() / S::from_usize_lossy(pairs);
    let coefficient_ratios = fitted_coefficients.iter().map(|c| *c / fitted_coefficients[0]).collect();
    let mu: Vec<S> = hermite_roots::<S>(order)?
        .into_iter()
        .filter(|r| *r > S::zero())
        .collect();
    let hermite_ratios = mu.iter().map(|m| *m / mu[0]).collect();
    Ok(BranchReport {
        epsilons: epsilons.to_vec(),
        zero_sets,
        positive_counts,
        pairs,
        fitted_exponent,
        fitted_exponents,
        fitted_coefficients,
        coefficient_ratios,
        hermite_roots_doubled: mu.iter().map(|m| *m + *m).collect(),
        hermite_roots: mu,
        hermite_ratios,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport<S> {
    pub max_abs: S,
    /// `max |phi| < 1`.
    pub below_one: bool,
    /// `max |phi| == 1`, attained only by the sign function among the profiles of interest.
    pub boundary_case: bool,
    /// Open-closed only: `N`.
    pub norm: Option<S>,
    /// Open-closed only: `max_i |phi_i| / (N^(1/(p-1)) |v_i|)`.
    pub weighted_ratio: Option<S>,
    pub weighted_bound_holds: Option<bool>,
}

/// `max |phi|`, and for open-closed results the weighted bound `|phi| < N^(1/(p-1)) v`.
pub fn bound_report<S: Real>(phi: &Profile<S>, weight: Option<(&SingularWeight<S>, u32)>) -> Result<BoundReport<S>> {
    let max_abs = phi.max_abs();
    let (norm, weighted_ratio) = match weight {
        Some((w, p)) => {
            if !w.v.grid().same_as(phi.grid()) {
                return Err(Error::Grid("weight and profile live on different grids".into()));
            }
            let c = w.chi_bound(p);
            let r = phi
                .values()
                .iter()
                .zip(w.v.values())
                .fold(S::zero(), |acc, (f, v)| acc.max(f.abs() / (c * v.abs())));
            (Some(w.norm), Some(r))
        }
        None => (None, None),
    };
    Ok(BoundReport {
        max_abs,
        below_one: max_abs < S::one(),
        boundary_case: max_abs == S::one(),
        norm,
        weighted_ratio,
        weighted_bound_holds: weighted_ratio.map(|r| r < S::one()),
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DerivativeIdentity<S> {
    /// `sup |p^2 psi^(p^2-1) psi' - (K_2 psi)'|` over the checked nodes.
    pub sup: S,
    /// Node where the supremum is attained.
    pub at: S,
    pub nodes_checked: usize,
    pub delta: S,
}

/// Checks `p^2 psi^(p^2 - 1) psi' = d/dt (K_2 psi)` on a closed-string profile.
///
/// `psi'` is a centered difference with step `delta` of the extension
/// `psi(t) = (K_2 psi)(t)^(1/p^2)`, which is exact at nodes for a fixed point
/// and smooth between them; `(K_2 psi)'` differentiates the kernel
/// analytically. Nodes within five steps of a zero of `psi` are skipped.
pub fn derivative_identity<S: Real>(psi: &Profile<S>, p: u32, delta: S) -> Result<DerivativeIdentity<S>> {
    if !(delta > S::zero() && delta <= S::lit(1e-2)) {
        return Err(Error::Domain(format!("difference step must lie in (0, 1e-2], got {delta}")));
    }
    let psi = if psi.parity() == Some(Parity::Even) {
        psi.clone()
    } else {
        psi.with_parity(Some(Parity::Even))?
    };
    let grid = *psi.grid();
    let h = grid.step();
    let k = p * p;
    let exp = i32::try_from(k - 1).map_err(|_| Error::Domain(format!("power {p} too large")))?;
    let kf = S::from_u32(k).expect("small integer");
    let zeros = find_zeros(&psi, S::lit(DEFAULT_ZERO_TOL));
    let op = SymmetricOperator::new(KernelParams::closed(), grid, Parity::Even, psi.tails());
    let half = psi.half_values();
    let mut sup = S::zero();
    let mut at = S::zero();
    let mut checked = 0;
    for (j, &value) in half.iter().enumerate() {
        let t = grid.half_node(j);
        if zeros.iter().any(|z| (t - z.location).abs() <= S::lit(5.0) * h) {
            continue;
        }
        let plus = signed_root(op.eval_at(half, t + delta), k)?;
        let minus = signed_root(op.eval_at(half, t - delta), k)?;
        let lhs = kf * value.powi(exp) * (plus - minus) / (delta + delta);
        let rhs = op.slope_at(half, t);
        let r = (lhs - rhs).abs();
        if r > sup {
            sup = r;
            at = t;
        }
        checked += 1;
    }
    Ok(DerivativeIdentity {
        sup,
        at,
        nodes_checked: checked,
        delta,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SandwichRow<S> {
    /// Ratio `chi_(n+1) / chi_n`.
    pub n: usize,
    pub log_max: S,
    pub log_min: S,
    /// `|log theta| · p^(1-n) · 1.5`.
    pub bound: S,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SandwichReport<S> {
    /// `max chi_2 / chi_1` over `t > 0`.
    pub theta: S,
    /// `min chi_2 / chi_1` over `t > 0`.
    pub eta: S,
    pub rows: Vec<SandwichRow<S>>,
    pub all_hold: bool,
}

/// Geometric contraction (in the exponent `p^(1-n)`) of successive iterate ratios.
pub fn sandwich_report<S: Real>(trace: &IterationTrace<S>, p: u32) -> Result<SandwichReport<S>> {
    if trace.ratio_max.len() < 3 {
        return Err(Error::Precondition(
            "sandwich check needs ratio records of at least three iterations".into(),
        ));
    }
    let theta = trace.ratio_max[1];
    let eta = trace.ratio_min[1];
    let pf = S::from_u32(p).expect("small integer");
    let scale = theta.ln().abs() * S::lit(1.5);
    let rows: Vec<SandwichRow<S>> = (2..trace.ratio_max.len())
        .map(|n| {
            let log_max = trace.ratio_max[n].ln();
            let log_min = trace.ratio_min[n].ln();
            let bound = scale * pf.powi(1 - n as i32);
            SandwichRow {
                n,
                log_max,
                log_min,
                bound,
                holds: log_max.abs() <= bound,
            }
        })
        .collect();
    let all_hold = rows.iter().all(|r| r.holds);
    Ok(SandwichReport {
        theta,
        eta,
        rows,
        all_hold,
    })
}
