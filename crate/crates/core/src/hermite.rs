//! Physicists' Hermite polynomials and Gaussian-weighted inner products.
//!
//! `H_{n+1} = 2t H_n - 2n H_{n-1}`, orthogonal under the unit-mass weight
//! `dmu_alpha = sqrt(alpha/pi) exp(-alpha t^2) dt` with `alpha = 1`, where
//! `(H_n, H_n) = 2^n n!`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::profile::{Grid, Profile};
use crate::quadrature;
use crate::scalar::Real;

/// Largest supported polynomial index.
pub const MAX_ORDER: usize = 64;

/// Sub-intervals used for each tail beyond the grid.
const TAIL_PANELS: usize = 4000;

/// Extra decay (in units of the weight exponent) covered by the tail quadrature.
const TAIL_DECAY: f64 = 80.0;

fn check_order(n: usize) -> Result<()> {
    if n > MAX_ORDER {
        return Err(Error::Degree {
            degree: n,
            max: MAX_ORDER,
        });
    }
    Ok(())
}

/// `H_n(t)`.
pub fn hermite_eval<S: Real>(n: usize, t: S) -> Result<S> {
    check_order(n)?;
    Ok(hermite_unchecked(n, t))
}

fn hermite_unchecked<S: Real>(n: usize, t: S) -> S {
    let two = S::lit(2.0);
    let (mut prev, mut cur) = (S::one(), two * t);
    if n == 0 {
        return prev;
    }
    for k in 1..n {
        let next = two * t * cur - two * S::from_usize_lossy(k) * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `H_n(t) / sqrt(2^n n!)`; same sign as `H_n`, no overflow for large `n`.
fn hermite_normalized<S: Real>(n: usize, t: S) -> S {
    let two = S::lit(2.0);
    let (mut prev, mut cur) = (S::one(), two.sqrt() * t);
    if n == 0 {
        return prev;
    }
    for k in 1..n {
        let kf = S::from_usize_lossy(k);
        let next = (two / (kf + S::one())).sqrt() * t * cur - (kf / (kf + S::one())).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `V_n(t) = 2^(-n/2) H_n(t / sqrt 2)`.
pub fn modified_hermite_eval<S: Real>(n: usize, t: S) -> Result<S> {
    check_order(n)?;
    let two = S::lit(2.0);
    Ok(hermite_unchecked(n, t / two.sqrt()) * two.powf(-S::from_usize_lossy(n) / two))
}

/// The `n` real roots of `H_n`, ascending.
///
/// Roots of `H_k` are bracketed by those of `H_{k-1}` (interlacing) and the
/// bound `|t| < sqrt(2k + 1)`, then bisected to machine precision.
pub fn hermite_roots<S: Real>(n: usize) -> Result<Vec<S>> {
    if n == 0 {
        return Err(Error::Domain("H_0 has no roots".into()));
    }
    check_order(n)?;
    let mut roots: Vec<S> = vec![S::zero()];
    for k in 2..=n {
        let bound = S::from_usize_lossy(2 * k + 1).sqrt();
        let mut knots = Vec::with_capacity(k + 1);
        knots.push(-bound);
        knots.extend(roots.iter().copied());
        knots.push(bound);
        roots = knots
            .windows(2)
            .map(|w| bisect_sign(|t| hermite_normalized(k, t), w[0], w[1]))
            .collect();
    }
    Ok(roots)
}

fn bisect_sign<S: Real>(f: impl Fn(S) -> S, mut a: S, mut b: S) -> S {
    let mut fa = f(a);
    for _ in 0..300 {
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

/// Gaussian weight `sqrt(alpha/pi) exp(-alpha t^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightParams<S> {
    alpha: S,
}

impl<S: Real> WeightParams<S> {
    pub fn new(alpha: S) -> Result<Self> {
        if !(alpha.is_finite() && alpha > S::zero()) {
            return Err(Error::Domain(format!("weight rate must be positive, got {alpha}")));
        }
        Ok(WeightParams { alpha })
    }

    /// `alpha = 1`, the Hermite weight.
    pub fn unit() -> Self {
        WeightParams { alpha: S::one() }
    }

    /// `alpha = 1/2`, the weight paired with `V_n`.
    pub fn half() -> Self {
        WeightParams {
            alpha: S::lit(0.5),
        }
    }

    pub fn alpha(&self) -> S {
        self.alpha
    }

    pub fn density(&self, t: S) -> S {
        (self.alpha / S::PI()).sqrt() * (-self.alpha * t * t).exp()
    }
}

/// `∫ h dmu` where `h` is known on the grid nodes and by separate formulas
/// on `(-inf, -T)` and `(T, inf)`.
fn weighted_integral<S: Real>(
    grid: &Grid<S>,
    on_nodes: impl Fn(usize, S) -> S,
    left: impl Fn(S) -> S,
    right: impl Fn(S) -> S,
    w: WeightParams<S>,
) -> S {
    let weights = quadrature::full_line_weights(grid);
    let inner: S = weights
        .iter()
        .enumerate()
        .map(|(i, &q)| {
            let t = grid.node(i);
            q * on_nodes(i, t) * w.density(t)
        })
        .sum();
    let big_t = grid.half_width();
    let end = (big_t * big_t + S::lit(TAIL_DECAY) / w.alpha).sqrt();
    let h = (end - big_t) / S::from_usize_lossy(TAIL_PANELS);
    let tail_weights = quadrature::half_line_weights(TAIL_PANELS, h);
    let tails: S = tail_weights
        .iter()
        .enumerate()
        .map(|(j, &q)| {
            let t = big_t + h * S::from_usize_lossy(j);
            q * w.density(t) * (right(t) + left(-t))
        })
        .sum();
    inner + tails
}

/// `(f, g)_alpha = ∫ f g dmu_alpha`: grid quadrature plus the constant
/// tails of `f` integrated against `g` beyond `±T`.
pub fn weighted_inner<S: Real>(f: &Profile<S>, g: impl Fn(S) -> S, w: WeightParams<S>) -> S {
    let values = f.values();
    let tails = f.tails();
    weighted_integral(
        f.grid(),
        |i, t| values[i] * g(t),
        |t| tails.left_limit * g(t),
        |t| tails.right_limit * g(t),
        w,
    )
}

/// `∫ f g dmu_alpha` for functions known everywhere; the grid only fixes the quadrature.
pub fn weighted_inner_fn<S: Real>(
    grid: &Grid<S>,
    f: impl Fn(S) -> S,
    g: impl Fn(S) -> S,
    w: WeightParams<S>,
) -> S {
    let h = |t: S| f(t) * g(t);
    weighted_integral(grid, |_, t| h(t), h, h, w)
}

/// Hermite coefficients `a_n = (phi, H_n)_1`, `n = 0..=order`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HermiteCoeffs<S> {
    pub order: usize,
    pub a: Vec<S>,
}

impl<S: Real> HermiteCoeffs<S> {
    /// `Σ a_n t^n / n!`, the Taylor series of `K_1 phi` at 0.
    pub fn taylor_sum(&self, t: S) -> S {
        let mut term = S::one();
        let mut acc = S::zero();
        for (n, &a) in self.a.iter().enumerate() {
            if n > 0 {
                term = term * t / S::from_usize_lossy(n);
            }
            acc += a * term;
        }
        acc
    }
}

pub fn hermite_coeffs<S: Real>(phi: &Profile<S>, order: usize) -> Result<HermiteCoeffs<S>> {
    check_order(order)?;
    let a = (0..=order)
        .map(|n| weighted_inner(phi, |t| hermite_unchecked(n, t), WeightParams::unit()))
        .collect();
    Ok(HermiteCoeffs { order, a })
}

/// `(2^n / sqrt pi) ∫ phi(tau) tau^n exp(-tau^2) dtau`.
pub fn moment<S: Real>(phi: &Profile<S>, n: usize) -> Result<S> {
    check_order(n)?;
    let exp = i32::try_from(n).expect("order is capped");
    Ok(weighted_inner(
        phi,
        |t| (S::lit(2.0) * t).powi(exp),
        WeightParams::unit(),
    ))
}

/// Largest `|Σ_{n<=N} a_n t^n/n! - phi(t)^p|` over nodes with `|t| <= radius`.
pub fn taylor_identity_check<S: Real>(phi: &Profile<S>, p: u32, order: usize, radius: S) -> Result<S> {
    let coeffs = hermite_coeffs(phi, order)?;
    let exp = i32::try_from(p).map_err(|_| Error::Domain(format!("power {p} too large")))?;
    Ok(phi
        .grid()
        .nodes()
        .zip(phi.values())
        .filter(|(t, _)| t.abs() <= radius)
        .map(|(t, &v)| (coeffs.taylor_sum(t) - v.powi(exp)).abs())
        .fold(S::zero(), S::max))
}

/// `|(phi^p, H_n)_1 - (phi, V_n)_{1/2}|`.
pub fn dual_pairing_check<S: Real>(phi: &Profile<S>, p: u32, n: usize) -> Result<S> {
    check_order(n)?;
    let exp = i32::try_from(p).map_err(|_| Error::Domain(format!("power {p} too large")))?;
    let power = phi.map(|v| v.powi(exp))?;
    let lhs = weighted_inner(&power, |t| hermite_unchecked(n, t), WeightParams::unit());
    let rhs = weighted_inner(
        phi,
        |t| modified_hermite_eval(n, t).expect("order checked"),
        WeightParams::half(),
    );
    Ok((lhs - rhs).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{sample, Parity, TailModel};

    fn grid() -> Grid<f64> {
        Grid::new(10.0, 2001).unwrap()
    }

    #[test]
    fn recurrence_values() {
        assert_eq!(hermite_eval(2, 1.0f64).unwrap(), 2.0);
        assert_eq!(hermite_eval(3, 0.0f64).unwrap(), 0.0);
        let l = (6.0f64 - 2.0 * 6f64.sqrt()).sqrt();
        assert!(hermite_eval(4, l / 2.0).unwrap().abs() < 1e-12);
        assert!(matches!(hermite_eval(65, 0.0f64), Err(Error::Degree { .. })));
    }

    #[test]
    fn modified_values() {
        assert_eq!(modified_hermite_eval(0, 3.0f64).unwrap(), 1.0);
        // V_2 = t^2 - 1, V_1 = t
        assert!(modified_hermite_eval(2, 1.0f64).unwrap().abs() < 1e-14);
        assert!((modified_hermite_eval(2, 3.0f64).unwrap() - 8.0).abs() < 1e-13);
        assert!((modified_hermite_eval(1, 2f64.sqrt()).unwrap() - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn roots_of_low_orders() {
        assert_eq!(hermite_roots::<f64>(1).unwrap(), vec![0.0]);
        let r = hermite_roots::<f64>(2).unwrap();
        assert!((r[1] - 0.5f64.sqrt()).abs() < 1e-15 && (r[0] + r[1]).abs() < 1e-15);
        let r = hermite_roots::<f64>(4).unwrap();
        assert!((r[2] - 0.52465).abs() < 1e-5 && (r[3] - 1.65068).abs() < 1e-5);
    }

    #[test]
    fn roots_are_symmetric_interlacing_and_accurate() {
        let mut prev = hermite_roots::<f64>(1).unwrap();
        for n in 2..=64 {
            let r = hermite_roots::<f64>(n).unwrap();
            assert_eq!(r.len(), n);
            for i in 0..n {
                assert!((r[i] + r[n - 1 - i]).abs() < 1e-12);
                // Newton step |h(r) / h'(r)|, with h'_n = sqrt(2n) h_(n-1)
                let step = hermite_normalized(n, r[i]) / ((2 * n) as f64).sqrt() / hermite_normalized(n - 1, r[i]);
                assert!(step.abs() < 1e-12 * (1.0 + r[i].abs()), "n = {n}");
            }
            for i in 0..n - 1 {
                assert!(r[i] < prev[i] && prev[i] < r[i + 1]);
            }
            prev = r;
        }
    }

    #[test]
    fn unit_mass_for_any_rate() {
        let g = grid();
        for alpha in [0.05, 0.5, 1.0, 3.0] {
            let one = Profile::constant(g, 1.0);
            let m = weighted_inner(&one, |_| 1.0, WeightParams::new(alpha).unwrap());
            assert!((m - 1.0).abs() < 1e-12, "alpha {alpha}: {m}");
        }
    }

    #[test]
    fn orthogonality_table() {
        let g = grid();
        let w = WeightParams::unit();
        for m in 0..=12usize {
            for n in 0..=12usize {
                let v = weighted_inner_fn(&g, |t| hermite_unchecked(m, t), |t| hermite_unchecked(n, t), w);
                let norm = (1u64 << n) as f64 * (1..=n as u64).product::<u64>() as f64;
                if m == n {
                    assert!((v / norm - 1.0).abs() < 1e-9, "n = {n}: {v}");
                } else {
                    let scale = (norm * (1u64 << m) as f64 * (1..=m as u64).product::<u64>() as f64).sqrt();
                    assert!(v.abs() / scale < 1e-9, "({m}, {n}): {v}");
                }
            }
        }
    }

    #[test]
    fn coefficients_of_constants_and_odd_profiles() {
        let g = grid();
        let c = hermite_coeffs(&Profile::constant(g, 1.0), 6).unwrap();
        assert!((c.a[0] - 1.0).abs() < 1e-12);
        assert!(c.a[1..].iter().all(|a| a.abs() < 1e-9));
        let odd = sample(|t: f64| t.tanh(), &g, TailModel::open_odd(), Some(Parity::Odd)).unwrap();
        let c = hermite_coeffs(&odd, 8).unwrap();
        for n in (0..=8).step_by(2) {
            assert!(c.a[n].abs() < 1e-12);
        }
        assert!((moment(&odd, 1).unwrap() - c.a[1]).abs() < 1e-12);
        assert!(moment(&odd, 0).unwrap().abs() < 1e-12);
        assert!((moment(&Profile::constant(g, 1.0), 0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_checks_on_constant() {
        let one = Profile::constant(grid(), 1.0);
        assert!(taylor_identity_check(&one, 3, 9, 0.5).unwrap() < 1e-12);
        assert!(dual_pairing_check(&one, 3, 0).unwrap() < 1e-12);
    }
}
