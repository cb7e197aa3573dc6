//! Gaussian smoothing operator `K_gamma` and the heat-flow interpolant.
//!
//! `(K_gamma f)(t) = sqrt(gamma/pi) ∫ f(tau) exp(-gamma (t - tau)^2) dtau`.
//!
//! A profile is split into an analytic baseline carrying its tail limits,
//! `b(tau) = (L + R)/2 + (R - L)/2 · erf(tau)`, plus a remainder `f - b`
//! that vanishes at both ends of the grid. The baseline is smoothed in closed
//! form (`K_gamma erf = erf(t / sqrt(1 + 1/gamma))`), which accounts for the
//! constant tails beyond `±T` exactly; the remainder goes through composite
//! Simpson quadrature on the grid.

use crate::error::{Error, Result};
use crate::profile::{Grid, Parity, Profile, TailModel};
use crate::quadrature::{self, QuadPoint};
use crate::scalar::Real;

/// Exponent beyond which `exp(-x)` underflows in double precision.
const UNDERFLOW: f64 = 745.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams<S> {
    gamma: S,
}

impl<S: Real> KernelParams<S> {
    pub fn new(gamma: S) -> Result<Self> {
        if !(gamma.is_finite() && gamma > S::zero()) {
            return Err(Error::Domain(format!("kernel rate must be positive, got {gamma}")));
        }
        Ok(KernelParams { gamma })
    }

    /// `K_1`, the open-string operator.
    pub fn open() -> Self {
        KernelParams { gamma: S::one() }
    }

    /// `K_2`, the closed-string operator.
    pub fn closed() -> Self {
        KernelParams {
            gamma: S::lit(2.0),
        }
    }

    pub fn gamma(&self) -> S {
        self.gamma
    }

    /// Kernel density `sqrt(gamma/pi) exp(-gamma d^2)`.
    #[inline]
    pub fn density(&self, d: S) -> S {
        let x = self.gamma * d * d;
        if x > S::lit(UNDERFLOW) {
            return S::zero();
        }
        (self.gamma / S::PI()).sqrt() * (-x).exp()
    }

    /// `d/dt` of `density(t - tau)`, written in terms of `d = t - tau`.
    #[inline]
    pub fn density_slope(&self, d: S) -> S {
        -S::lit(2.0) * self.gamma * d * self.density(d)
    }

    /// `K_gamma` applied to the erf baseline of `tails`, evaluated at `t`.
    pub(crate) fn smoothed_baseline(&self, tails: TailModel<S>, t: S) -> S {
        let (mid, jump) = baseline_parts(tails);
        mid + jump * (t / self.baseline_width()).erf()
    }

    pub(crate) fn smoothed_baseline_slope(&self, tails: TailModel<S>, t: S) -> S {
        let (_, jump) = baseline_parts(tails);
        let w = self.baseline_width();
        jump * S::lit(2.0) / (S::PI().sqrt() * w) * (-(t / w) * (t / w)).exp()
    }

    /// `sqrt(1 + 1/gamma)`: width of `K_gamma erf`.
    fn baseline_width(&self) -> S {
        (S::one() + self.gamma.recip()).sqrt()
    }
}

fn baseline_parts<S: Real>(tails: TailModel<S>) -> (S, S) {
    let half = S::lit(0.5);
    (
        (tails.left_limit + tails.right_limit) * half,
        (tails.right_limit - tails.left_limit) * half,
    )
}

/// The erf baseline carrying the tail limits of a profile.
#[inline]
pub(crate) fn baseline<S: Real>(tails: TailModel<S>, tau: S) -> S {
    let (mid, jump) = baseline_parts(tails);
    mid + jump * tau.erf()
}

fn remainder<S: Real>(profile: &Profile<S>) -> Vec<S> {
    let tails = profile.tails();
    profile
        .grid()
        .nodes()
        .zip(profile.values())
        .map(|(t, &v)| v - baseline(tails, t))
        .collect()
}

fn full_rule<S: Real>(k: &KernelParams<S>, grid: &Grid<S>) -> Vec<QuadPoint<S>> {
    quadrature::full_line_rule(grid, quadrature::refinement_for(k.gamma, grid.step()))
}

/// `K_gamma f` on every node of the profile's grid, full-line quadrature.
///
/// Output tails equal input tails; a declared parity is carried over.
pub fn apply_kernel<S: Real>(k: &KernelParams<S>, f: &Profile<S>) -> Profile<S> {
    let grid = *f.grid();
    let rule = full_rule(k, &grid);
    let r = remainder(f);
    let tails = f.tails();
    let values: Vec<S> = grid
        .nodes()
        .map(|t| {
            let mut acc = k.smoothed_baseline(tails, t);
            for q in &rule {
                acc += q.weight * k.density(t - q.at) * q.read(&r);
            }
            acc
        })
        .collect();
    match Profile::new(grid, values.clone(), tails, f.parity()) {
        Ok(p) => p,
        // Rounding in the mirrored sums can exceed the parity tolerance only for
        // huge dynamic range; fall back to an undeclared result in that case.
        Err(_) => Profile::new(grid, values, tails, None).expect("finite kernel output"),
    }
}

/// `K_gamma f` through the half-line formula with kernel
/// `exp(-gamma (t - tau)^2) ± exp(-gamma (t + tau)^2)`; requires a declared parity.
///
/// The result has the same parity as `f`, exactly.
pub fn apply_kernel_symmetric<S: Real>(k: &KernelParams<S>, f: &Profile<S>) -> Result<Profile<S>> {
    let parity = f
        .parity()
        .ok_or_else(|| Error::Parity("symmetric kernel needs a declared parity".into()))?;
    let op = SymmetricOperator::new(*k, *f.grid(), parity, f.tails());
    let half = op.apply_half(f.half_values());
    Profile::from_half(*f.grid(), &half, f.tails(), parity)
}

/// Symmetric path when the profile declares a parity, full-line path otherwise.
pub fn apply_kernel_auto<S: Real>(k: &KernelParams<S>, f: &Profile<S>) -> Profile<S> {
    match f.parity() {
        Some(_) => apply_kernel_symmetric(k, f).expect("parity declared"),
        None => apply_kernel(k, f),
    }
}

/// `(K_gamma f)(t)` at an arbitrary point, using the same quadrature as [`apply_kernel_auto`].
pub fn kernel_at<S: Real>(k: &KernelParams<S>, f: &Profile<S>, t: S) -> S {
    point_eval(k, f, t, false)
}

/// `d/dt (K_gamma f)(t)` at an arbitrary point (the kernel is differentiated analytically).
pub fn kernel_slope_at<S: Real>(k: &KernelParams<S>, f: &Profile<S>, t: S) -> S {
    point_eval(k, f, t, true)
}

fn point_eval<S: Real>(k: &KernelParams<S>, f: &Profile<S>, t: S, slope: bool) -> S {
    let tails = f.tails();
    let grid = *f.grid();
    let base = if slope {
        k.smoothed_baseline_slope(tails, t)
    } else {
        k.smoothed_baseline(tails, t)
    };
    let refine = quadrature::refinement_for(k.gamma, grid.step());
    match f.parity() {
        Some(parity) => {
            let m = grid.half_count();
            let r: Vec<S> = remainder(f)[m..].to_vec();
            let s: S = parity.sign();
            let rule = quadrature::half_line_rule(&grid, refine);
            let mut acc = base;
            for q in &rule {
                let kern = if slope {
                    k.density_slope(t - q.at) + s * k.density_slope(t + q.at)
                } else {
                    k.density(t - q.at) + s * k.density(t + q.at)
                };
                acc += q.weight * kern * q.read(&r);
            }
            acc
        }
        None => {
            let r = remainder(f);
            let rule = quadrature::full_line_rule(&grid, refine);
            let mut acc = base;
            for q in &rule {
                let kern = if slope {
                    k.density_slope(t - q.at)
                } else {
                    k.density(t - q.at)
                };
                acc += q.weight * kern * q.read(&r);
            }
            acc
        }
    }
}

/// Heat-flow interpolant `u(x, ·)`: the Poisson integral with rate `1/x`.
///
/// `u(x, t) = (pi x)^(-1/2) ∫ phi(tau) exp(-(t - tau)^2 / x) dtau`, for `0 < x <= 1`.
pub fn heat_interpolate<S: Real>(phi: &Profile<S>, x: S) -> Result<Profile<S>> {
    if !(x > S::zero() && x <= S::one()) {
        return Err(Error::Domain(format!("heat time x must lie in (0, 1], got {x}")));
    }
    let k = KernelParams::new(x.recip())?;
    Ok(apply_kernel_auto(&k, phi))
}

/// Precomputed half-line operator for repeated application on one grid.
///
/// Represents `f ↦ K_gamma(f + w·f)` restricted to functions of a fixed parity
/// and fixed tails, where the optional weighted part `w·f` is described by
/// its own quadrature points (used for the singular weight of the
/// open-closed equation). Outputs are produced for `t >= 0` only.
#[derive(Debug, Clone)]
pub struct SymmetricOperator<S> {
    kernel: KernelParams<S>,
    grid: Grid<S>,
    parity: Parity,
    tails: TailModel<S>,
    base_rule: Vec<QuadPoint<S>>,
    weighted_rule: Vec<QuadPoint<S>>,
    baseline_half: Vec<S>,
    matrix: Vec<S>,
    offset: Vec<S>,
}

impl<S: Real> SymmetricOperator<S> {
    pub fn new(kernel: KernelParams<S>, grid: Grid<S>, parity: Parity, tails: TailModel<S>) -> Self {
        Self::with_weighted_rule(kernel, grid, parity, tails, Vec::new())
    }

    pub(crate) fn with_weighted_rule(
        kernel: KernelParams<S>,
        grid: Grid<S>,
        parity: Parity,
        tails: TailModel<S>,
        weighted_rule: Vec<QuadPoint<S>>,
    ) -> Self {
        let refine = quadrature::refinement_for(kernel.gamma, grid.step());
        let base_rule = quadrature::half_line_rule(&grid, refine);
        let m = grid.half_count();
        let baseline_half: Vec<S> = (0..=m).map(|j| baseline(tails, grid.half_node(j))).collect();
        let mut op = SymmetricOperator {
            kernel,
            grid,
            parity,
            tails,
            base_rule,
            weighted_rule,
            baseline_half,
            matrix: vec![S::zero(); (m + 1) * (m + 1)],
            offset: vec![S::zero(); m + 1],
        };
        for i in 0..=m {
            let t = grid.half_node(i);
            let mut base_on_baseline = S::zero();
            let row = &mut op.matrix[i * (m + 1)..(i + 1) * (m + 1)];
            for q in op.base_rule.iter().chain(&op.weighted_rule) {
                let c = q.weight * kern_pm(&kernel, parity, t, q.at);
                row[q.left] += c * (S::one() - q.frac);
                if q.frac != S::zero() {
                    row[q.right] += c * q.frac;
                }
            }
            for q in &op.base_rule {
                base_on_baseline +=
                    q.weight * kern_pm(&kernel, parity, t, q.at) * q.read(&op.baseline_half);
            }
            op.offset[i] = kernel.smoothed_baseline(tails, t) - base_on_baseline;
        }
        op
    }

    pub fn grid(&self) -> &Grid<S> {
        &self.grid
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn tails(&self) -> TailModel<S> {
        self.tails
    }

    pub fn kernel(&self) -> &KernelParams<S> {
        &self.kernel
    }

    /// Operator output at the half-line nodes, given half-line input values.
    pub fn apply_half(&self, half: &[S]) -> Vec<S> {
        let n = self.offset.len();
        debug_assert_eq!(half.len(), n);
        let mut out = self.offset.clone();
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.matrix[i * n..(i + 1) * n];
            *o += row.iter().zip(half).map(|(a, b)| *a * *b).sum::<S>();
        }
        if self.parity == Parity::Odd {
            out[0] = S::zero();
        }
        out
    }

    /// Operator output at an arbitrary `t`, from half-line input values.
    pub fn eval_at(&self, half: &[S], t: S) -> S {
        self.point(half, t, false)
    }

    /// `d/dt` of the operator output at an arbitrary `t`.
    pub fn slope_at(&self, half: &[S], t: S) -> S {
        self.point(half, t, true)
    }

    fn point(&self, half: &[S], t: S, slope: bool) -> S {
        let k = &self.kernel;
        let s: S = self.parity.sign();
        let kern = |tau: S| {
            if slope {
                k.density_slope(t - tau) + s * k.density_slope(t + tau)
            } else {
                k.density(t - tau) + s * k.density(t + tau)
            }
        };
        let r: Vec<S> = half
            .iter()
            .zip(&self.baseline_half)
            .map(|(v, b)| *v - *b)
            .collect();
        let mut acc = if slope {
            k.smoothed_baseline_slope(self.tails, t)
        } else {
            k.smoothed_baseline(self.tails, t)
        };
        for q in &self.base_rule {
            acc += q.weight * kern(q.at) * q.read(&r);
        }
        for q in &self.weighted_rule {
            acc += q.weight * kern(q.at) * q.read(half);
        }
        acc
    }
}

#[inline]
fn kern_pm<S: Real>(k: &KernelParams<S>, parity: Parity, t: S, tau: S) -> S {
    k.density(t - tau) + parity.sign::<S>() * k.density(t + tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{sample, sgn};

    fn grid() -> Grid<f64> {
        Grid::new(10.0, 2001).unwrap()
    }

    #[test]
    fn rejects_non_positive_rate() {
        assert!(KernelParams::new(0.0f64).is_err());
        assert!(KernelParams::new(-1.0f64).is_err());
    }

    #[test]
    fn unit_mass_on_constants() {
        let one = Profile::constant(grid(), 1.0);
        for gamma in [0.5, 1.0, 2.0, 7.0] {
            let k = KernelParams::new(gamma).unwrap();
            let g = apply_kernel(&k, &one);
            assert!(g.values().iter().all(|v| (v - 1.0).abs() < 1e-12));
            let g = apply_kernel_symmetric(&k, &one).unwrap();
            assert!(g.values().iter().all(|v| (v - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn gaussian_bump_has_closed_form_image() {
        // K_2 of beta·exp(-alpha tau^2) = beta·sqrt(2/(alpha+2))·exp(-2 alpha t^2/(alpha+2))
        let (alpha, beta) = (0.7, 1.3);
        let f = sample(
            |t: f64| beta * (-alpha * t * t).exp(),
            &grid(),
            TailModel::constant(0.0),
            Some(Parity::Even),
        )
        .unwrap();
        let g = apply_kernel(&KernelParams::closed(), &f);
        for (t, v) in grid().nodes().zip(g.values()) {
            let exact = beta * (2.0 / (alpha + 2.0)).sqrt() * (-2.0 * alpha * t * t / (alpha + 2.0)).exp();
            assert!((v - exact).abs() < 1e-8, "t = {t}");
        }
    }

    #[test]
    fn sign_function_smooths_to_erf() {
        let f = sample(sgn, &grid(), TailModel::open_odd(), Some(Parity::Odd)).unwrap();
        let full = apply_kernel(&KernelParams::open(), &f);
        let sym = apply_kernel_symmetric(&KernelParams::open(), &f).unwrap();
        for (i, t) in grid().nodes().enumerate() {
            // K_1 sgn = erf(t) exactly
            assert!((full.values()[i] - libm::erf(t)).abs() < 1e-8, "t = {t}");
            assert!((sym.values()[i] - full.values()[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_path_requires_parity() {
        let f = sample(|t: f64| t.tanh(), &grid(), TailModel::open_odd(), None).unwrap();
        assert!(matches!(
            apply_kernel_symmetric(&KernelParams::open(), &f),
            Err(Error::Parity(_))
        ));
    }

    #[test]
    fn symmetric_and_full_paths_agree_on_even_profile() {
        let f = sample(|t: f64| (-t * t).exp(), &grid(), TailModel::constant(0.0), Some(Parity::Even))
            .unwrap();
        let k = KernelParams::open();
        let a = apply_kernel(&k, &f);
        let b = apply_kernel_symmetric(&k, &f).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn point_evaluation_matches_node_output() {
        let f = sample(|t: f64| (0.8 * t).tanh(), &grid(), TailModel::open_odd(), Some(Parity::Odd))
            .unwrap();
        let k = KernelParams::closed();
        let g = apply_kernel_symmetric(&k, &f).unwrap();
        for i in [0usize, 500, 1000, 1234, 2000] {
            let t = grid().node(i);
            assert!((kernel_at(&k, &f, t) - g.values()[i]).abs() < 1e-13);
        }
        let undeclared = f.with_parity(None).unwrap();
        assert!((kernel_at(&k, &undeclared, 0.37) - kernel_at(&k, &f, 0.37)).abs() < 1e-12);
    }

    #[test]
    fn slope_matches_finite_difference() {
        let f = sample(|t: f64| (0.8 * t).tanh(), &grid(), TailModel::open_odd(), Some(Parity::Odd))
            .unwrap();
        let k = KernelParams::open();
        for t in [-3.0, -0.2, 0.0, 0.41, 2.5] {
            let d = 1e-5;
            let fd = (kernel_at(&k, &f, t + d) - kernel_at(&k, &f, t - d)) / (2.0 * d);
            assert!((kernel_slope_at(&k, &f, t) - fd).abs() < 1e-8, "t = {t}");
        }
    }

    #[test]
    fn heat_interpolate_domain() {
        let one = Profile::constant(grid(), 1.0);
        assert!(matches!(heat_interpolate(&one, 0.0), Err(Error::Domain(_))));
        assert!(matches!(heat_interpolate(&one, 1.5), Err(Error::Domain(_))));
        for x in [1e-4, 0.3, 1.0] {
            let u = heat_interpolate(&one, x).unwrap();
            assert!(u.values().iter().all(|v| (v - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn heat_interpolate_at_one_is_open_kernel() {
        let f = sample(|t: f64| (1.3 * t).tanh(), &grid(), TailModel::open_odd(), Some(Parity::Odd))
            .unwrap();
        let u = heat_interpolate(&f, 1.0).unwrap();
        let g = apply_kernel(&KernelParams::open(), &f);
        assert!(crate::profile::sup_diff(&u, &g).unwrap() < 1e-12);
    }

    #[test]
    fn heat_interpolate_small_time_approaches_profile() {
        let f = sample(|t: f64| (1.3 * t).tanh(), &grid(), TailModel::open_odd(), Some(Parity::Odd))
            .unwrap();
        let u = heat_interpolate(&f, 1e-4).unwrap();
        assert!(crate::profile::sup_diff(&u, &f).unwrap() < 1e-3);
    }

    #[test]
    fn operator_matches_one_shot_application() {
        let g = grid();
        let f = sample(|t: f64| 1.0 - 1.5 * (-0.1 * t * t).exp(), &g, TailModel::closed(), Some(Parity::Even))
            .unwrap();
        let op = SymmetricOperator::new(KernelParams::closed(), g, Parity::Even, TailModel::closed());
        let half = op.apply_half(f.half_values());
        let direct = apply_kernel_symmetric(&KernelParams::closed(), &f).unwrap();
        for (a, b) in half.iter().zip(direct.half_values()) {
            assert!((a - b).abs() < 1e-14);
        }
        let t = 1.2345;
        assert!((op.eval_at(f.half_values(), t) - kernel_at(&KernelParams::closed(), &f, t)).abs() < 1e-13);
    }

    #[test]
    fn single_precision_unit_mass() {
        let g = Grid::new(10.0f32, 401).unwrap();
        let one = Profile::constant(g, 1.0f32);
        let out = apply_kernel(&KernelParams::closed(), &one);
        assert!(out.values().iter().all(|v| (v - 1.0).abs() < 1e-5));
    }
}
