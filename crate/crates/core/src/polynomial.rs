//! Polynomial solutions of the heat equation `u_x = u_tt / 4`.
//!
//! The heat flow acts on a polynomial as the finite series
//! `exp(dx/4 · d²/dt²)`, so forward and backward evolution are exact. The
//! coefficient type is generic: `f64` for numerics, `Ratio<BigInt>` when an
//! exact result is wanted.

use num_traits::{FromPrimitive, Num};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Largest supported degree.
pub const MAX_DEGREE: usize = 64;

/// `Σ c_k t^k`, stored lowest degree first with trailing zeros trimmed.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatPolynomial<S> {
    coefficients: Vec<S>,
}

impl<S: Clone + Num + FromPrimitive> HeatPolynomial<S> {
    pub fn new(mut coefficients: Vec<S>) -> Result<Self> {
        while coefficients.last().is_some_and(|c| c.is_zero()) {
            coefficients.pop();
        }
        if coefficients.len() > MAX_DEGREE + 1 {
            return Err(Error::Degree {
                degree: coefficients.len() - 1,
                max: MAX_DEGREE,
            });
        }
        Ok(HeatPolynomial { coefficients })
    }

    /// `t^n`.
    pub fn monomial(n: usize) -> Result<Self> {
        let mut c = vec![S::zero(); n + 1];
        c[n] = S::one();
        Self::new(c)
    }

    pub fn coefficients(&self) -> &[S] {
        &self.coefficients
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// Degree; the zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.coefficients.len().saturating_sub(1)
    }

    /// Index of the lowest nonzero coefficient (the order of the zero at t = 0).
    pub fn lowest_order(&self) -> Option<usize> {
        self.coefficients.iter().position(|c| !c.is_zero())
    }

    pub fn eval(&self, t: S) -> S {
        self.coefficients
            .iter()
            .rev()
            .fold(S::zero(), |acc, c| acc * t.clone() + c.clone())
    }

    pub fn derivative(&self) -> Self {
        let c = self
            .coefficients
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c.clone() * S::from_usize(k).expect("small integer"))
            .collect();
        Self::new(c).expect("degree does not grow")
    }

    /// Applies the heat flow for time `dx` (negative `dx` runs it backward):
    /// `c'_j = Σ_k c_{j+2k} · (j+2k)! / (j! k!) · (dx/4)^k`.
    pub fn evolve(&self, dx: S) -> Self {
        let quarter = dx / S::from_u8(4).expect("small integer");
        let n = self.coefficients.len();
        let mut out = vec![S::zero(); n];
        for (j, slot) in out.iter_mut().enumerate() {
            let mut factor = S::one();
            let mut power = S::one();
            let mut k = 0usize;
            let mut acc = S::zero();
            while j + 2 * k < n {
                if k > 0 {
                    // (j+2k)!/(j! k!) = previous · (j+2k)(j+2k-1)/k
                    let a = S::from_usize(j + 2 * k).expect("small integer");
                    let b = S::from_usize(j + 2 * k - 1).expect("small integer");
                    factor = factor * a * b / S::from_usize(k).expect("small integer");
                    power = power * quarter.clone();
                }
                acc = acc + self.coefficients[j + 2 * k].clone() * factor.clone() * power.clone();
                k += 1;
            }
            *slot = acc;
        }
        Self::new(out).expect("degree does not grow")
    }
}

/// Free-function form of [`HeatPolynomial::evolve`].
pub fn evolve_polynomial<S: Clone + Num + FromPrimitive>(
    p: &HeatPolynomial<S>,
    dx: S,
) -> HeatPolynomial<S> {
    p.evolve(dx)
}

impl<S: Real> HeatPolynomial<S> {
    /// All real roots in ascending order.
    ///
    /// Roots are isolated between consecutive critical points (found
    /// recursively from the derivative) and refined by bisection. A critical
    /// point where `|p|` is below `touch_tol` (relative to the coefficient
    /// scale) is reported as a touching root.
    pub fn real_roots(&self, touch_tol: S) -> Vec<S> {
        let n = self.coefficients.len();
        if n <= 1 {
            return Vec::new();
        }
        if n == 2 {
            return vec![-self.coefficients[0] / self.coefficients[1]];
        }
        let lead = self.coefficients[n - 1];
        let bound = S::one()
            + self.coefficients[..n - 1]
                .iter()
                .fold(S::zero(), |acc, c| acc.max((*c / lead).abs()));
        let scale = self
            .coefficients
            .iter()
            .fold(S::zero(), |acc, c| acc.max(c.abs()));
        let mut critical: Vec<S> = self
            .derivative()
            .real_roots(touch_tol)
            .into_iter()
            .filter(|c| c.abs() < bound)
            .collect();
        critical.dedup();
        let mut knots = Vec::with_capacity(critical.len() + 2);
        knots.push(-bound);
        knots.extend(critical.iter().copied());
        knots.push(bound);

        let mut roots: Vec<S> = Vec::new();
        for w in knots.windows(2) {
            let (a, b) = (w[0], w[1]);
            let (fa, fb) = (self.eval(a), self.eval(b));
            if fa == S::zero() || fb == S::zero() {
                continue;
            }
            if (fa < S::zero()) != (fb < S::zero()) {
                roots.push(bisect(|t| self.eval(t), a, b, fa));
            }
        }
        for &c in &critical {
            if self.eval(c).abs() <= touch_tol * scale {
                roots.push(c);
            }
        }
        for &k in &knots {
            if self.eval(k) == S::zero() {
                roots.push(k);
            }
        }
        roots.sort_by(|a, b| a.partial_cmp(b).expect("finite roots"));
        roots.dedup_by(|a, b| (*a - *b).abs() <= S::epsilon() * S::lit(16.0) * (S::one() + b.abs()));
        roots
    }
}

fn bisect<S: Real>(f: impl Fn(S) -> S, mut a: S, mut b: S, mut fa: S) -> S {
    for _ in 0..200 {
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

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_rational::Ratio;

    type Q = Ratio<BigInt>;

    fn q(n: i64, d: i64) -> Q {
        Ratio::new(BigInt::from(n), BigInt::from(d))
    }

    /// Independent route: `Σ_k (dx/4)^k / k! · p^(2k)` via repeated differentiation.
    fn evolve_by_series(p: &HeatPolynomial<Q>, dx: Q) -> HeatPolynomial<Q> {
        let mut out = vec![q(0, 1); p.coefficients().len()];
        let mut term = p.clone();
        let mut coef = q(1, 1);
        let mut k = 0i64;
        while !term.is_zero() {
            for (i, c) in term.coefficients().iter().enumerate() {
                out[i] = out[i].clone() + c.clone() * coef.clone();
            }
            term = term.derivative().derivative();
            k += 1;
            coef = coef * dx.clone() / q(4, 1) / q(k, 1);
        }
        HeatPolynomial::new(out).unwrap()
    }

    #[test]
    fn quartic_backward_evolution_is_exact() {
        let eps = q(1, 7);
        let p = HeatPolynomial::<Q>::monomial(4).unwrap();
        let out = p.evolve(-eps.clone());
        let expected = [q(3, 4) * eps.clone() * eps.clone(),
            q(0, 1),
            q(-3, 1) * eps.clone(),
            q(0, 1),
            q(1, 1)];
        assert_eq!(out.coefficients(), &expected[..]);
    }

    #[test]
    fn coefficient_formula_matches_series_route() {
        let p = HeatPolynomial::new(vec![q(2, 1), q(-1, 3), q(0, 1), q(5, 2), q(1, 1), q(0, 1), q(-7, 4), q(1, 9), q(3, 1)])
            .unwrap();
        for dx in [q(1, 3), q(-2, 5), q(7, 1)] {
            assert_eq!(p.evolve(dx.clone()), evolve_by_series(&p, dx));
        }
    }

    #[test]
    fn evolution_satisfies_heat_equation() {
        // d/dx of evolve(p, x) equals one quarter of its second t-derivative;
        // the x-derivative of each coefficient is read off by exact differencing of a
        // polynomial in x (degree <= deg/2), using the group property.
        let p = HeatPolynomial::new(vec![q(1, 1), q(0, 1), q(-2, 1), q(1, 1), q(0, 1), q(0, 1), q(1, 1)]).unwrap();
        let x = q(1, 5);
        let h = q(1, 1000);
        let forward = p.evolve(x.clone() + h.clone());
        let backward = p.evolve(x.clone() - h.clone());
        let mid = p.evolve(x);
        let rhs = mid.derivative().derivative();
        // central difference is exact up to O(h^2) terms; compare with tolerance in rationals
        for (i, r) in rhs.coefficients().iter().enumerate() {
            let fd = (forward.coefficients()[i].clone() - backward.coefficients()[i].clone()) / (q(2, 1) * h.clone());
            let diff = fd - r.clone() / q(4, 1);
            assert!(diff.clone() * diff < q(1, 10_000), "coefficient {i}");
        }
    }

    #[test]
    fn group_property_forward_then_backward() {
        let p = HeatPolynomial::new(vec![0.3f64, -1.0, 2.0, 0.5, -0.25, 1.0, 0.0, 2.0]).unwrap();
        let back = p.evolve(0.37).evolve(-0.37);
        for (a, b) in back.coefficients().iter().zip(p.coefficients()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn constants_are_invariant() {
        let c = HeatPolynomial::new(vec![4.25f64]).unwrap();
        assert_eq!(c.evolve(-3.0), c);
        assert_eq!(c.evolve(10.0), c);
    }

    #[test]
    fn degree_cap_is_enforced() {
        assert!(matches!(
            HeatPolynomial::<f64>::monomial(65),
            Err(Error::Degree { degree: 65, max: 64 })
        ));
        assert!(HeatPolynomial::<f64>::monomial(64).is_ok());
    }

    #[test]
    fn real_roots_of_evolved_quartic() {
        let eps = 1e-3f64;
        let p = HeatPolynomial::<f64>::monomial(4).unwrap().evolve(-eps);
        let roots = p.real_roots(1e-14);
        assert_eq!(roots.len(), 4);
        // t^2 = eps (3 ± sqrt 6) / 2
        let r1 = (eps * (3.0 - 6f64.sqrt()) / 2.0).sqrt();
        let r2 = (eps * (3.0 + 6f64.sqrt()) / 2.0).sqrt();
        let expect = [-r2, -r1, r1, r2];
        for (a, b) in roots.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn real_roots_handles_simple_cases() {
        assert!(HeatPolynomial::new(vec![1.0f64, 0.0, 1.0]).unwrap().real_roots(1e-12).is_empty());
        let r = HeatPolynomial::new(vec![-2.0f64, 0.0, 1.0]).unwrap().real_roots(1e-12);
        assert!((r[0] + 2f64.sqrt()).abs() < 1e-14 && (r[1] - 2f64.sqrt()).abs() < 1e-14);
        // touching root of t^2
        let r = HeatPolynomial::<f64>::monomial(2).unwrap().real_roots(1e-12);
        assert_eq!(r, vec![0.0]);
    }
}
