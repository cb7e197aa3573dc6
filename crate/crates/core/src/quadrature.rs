//! Composite quadrature rules on the symmetric grid.
//!
//! Every rule is assembled on the half line `[0, T]` and mirrored, so the
//! full-line rule and the half-line (parity) rule share exactly the same
//! nodes and weights. Half-line rules use composite Simpson panels with a
//! trailing 3/8 panel when the half-line interval count is odd.

use crate::profile::Grid;
use crate::scalar::Real;

/// One abscissa of a quadrature rule.
///
/// The integrand value at `at` is read from the node values as
/// `(1 - frac)·f[left] + frac·f[right]`, i.e. by linear interpolation
/// between two half-line (or full-line) node indices.
#[derive(Debug, Clone, Copy)]
pub(crate) struct QuadPoint<S> {
    pub at: S,
    pub weight: S,
    pub left: usize,
    pub right: usize,
    pub frac: S,
}

impl<S: Real> QuadPoint<S> {
    #[inline]
    pub fn node(index: usize, at: S, weight: S) -> Self {
        QuadPoint {
            at,
            weight,
            left: index,
            right: index,
            frac: S::zero(),
        }
    }

    #[inline]
    pub fn read(&self, values: &[S]) -> S {
        if self.left == self.right || self.frac == S::zero() {
            values[self.left]
        } else {
            values[self.left] * (S::one() - self.frac) + values[self.right] * self.frac
        }
    }
}

/// A contiguous group of cells integrated by one Newton-Cotes formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Panel {
    pub start: usize,
    pub cells: usize,
}

/// Panel layout for `m` cells: Simpson pairs, with a final 3/8 panel when `m` is odd.
pub(crate) fn panels(m: usize) -> Vec<Panel> {
    assert!(m >= 2, "at least two cells are required");
    let mut out = Vec::with_capacity(m / 2 + 1);
    let simpson_cells = if m.is_multiple_of(2) { m } else { m - 3 };
    let mut start = 0;
    while start < simpson_cells {
        out.push(Panel { start, cells: 2 });
        start += 2;
    }
    if m % 2 == 1 {
        out.push(Panel { start, cells: 3 });
    }
    out
}

/// Newton-Cotes coefficients of a panel, in units of the step `h`.
pub(crate) fn panel_coefficients(cells: usize) -> &'static [f64] {
    match cells {
        2 => &[1.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0],
        3 => &[3.0 / 8.0, 9.0 / 8.0, 9.0 / 8.0, 3.0 / 8.0],
        _ => unreachable!("only Simpson and 3/8 panels are used"),
    }
}

/// Node weights for `m` cells of width `h` on the half line (m + 1 weights).
pub(crate) fn half_line_weights<S: Real>(m: usize, h: S) -> Vec<S> {
    let mut w = vec![S::zero(); m + 1];
    for panel in panels(m) {
        for (k, &c) in panel_coefficients(panel.cells).iter().enumerate() {
            w[panel.start + k] += S::lit(c) * h;
        }
    }
    w
}

/// Node weights on the full symmetric grid (mirror of the half-line rule).
pub(crate) fn full_line_weights<S: Real>(grid: &Grid<S>) -> Vec<S> {
    let m = grid.half_count();
    let half = half_line_weights(m, grid.step());
    let mut w = vec![S::zero(); grid.n_points()];
    for (j, &wj) in half.iter().enumerate() {
        w[m + j] += wj;
        w[m - j] += wj;
    }
    w
}

/// Number of sub-intervals per cell so that a Gaussian of rate `gamma` is resolved.
///
/// With `gamma·h'^2 <= 0.06` the Simpson error on a Gaussian is far below
/// double-precision rounding. The count is even so sub-panels never straddle a node.
pub(crate) fn refinement_for<S: Real>(gamma: S, h: S) -> usize {
    let limit = S::lit(0.06);
    if gamma * h * h <= limit {
        return 1;
    }
    let s = (h * (gamma / limit).sqrt()).ceil().to_usize().unwrap_or(2).max(2);
    s + s % 2
}

/// Half-line rule over node indices `0..=m` (index 0 is t = 0).
///
/// With `refine == 1` the rule is the node rule; otherwise each cell is split
/// into `refine` sub-intervals integrated by Simpson on the linear interpolant.
pub(crate) fn half_line_rule<S: Real>(grid: &Grid<S>, refine: usize) -> Vec<QuadPoint<S>> {
    let m = grid.half_count();
    let h = grid.step();
    if refine <= 1 {
        return half_line_weights(m, h)
            .into_iter()
            .enumerate()
            .map(|(j, w)| QuadPoint::node(j, grid.half_node(j), w))
            .collect();
    }
    debug_assert!(refine.is_multiple_of(2));
    let sub = h / S::from_usize_lossy(refine);
    let mut points: Vec<QuadPoint<S>> = Vec::with_capacity(m * refine + 1);
    let mut node_weight = vec![S::zero(); m + 1];
    for cell in 0..m {
        for k in 0..=refine {
            let c = if k == 0 || k == refine {
                1.0 / 3.0
            } else if k % 2 == 1 {
                4.0 / 3.0
            } else {
                2.0 / 3.0
            };
            let w = S::lit(c) * sub;
            if k == 0 {
                node_weight[cell] += w;
            } else if k == refine {
                node_weight[cell + 1] += w;
            } else {
                let frac = S::from_usize_lossy(k) / S::from_usize_lossy(refine);
                points.push(QuadPoint {
                    at: grid.half_node(cell) + sub * S::from_usize_lossy(k),
                    weight: w,
                    left: cell,
                    right: cell + 1,
                    frac,
                });
            }
        }
    }
    for (j, w) in node_weight.into_iter().enumerate() {
        points.push(QuadPoint::node(j, grid.half_node(j), w));
    }
    points
}

/// Full-line rule over full-grid node indices, mirrored from [`half_line_rule`].
pub(crate) fn full_line_rule<S: Real>(grid: &Grid<S>, refine: usize) -> Vec<QuadPoint<S>> {
    let m = grid.half_count();
    let half = half_line_rule(grid, refine);
    let mut out = Vec::with_capacity(2 * half.len());
    for q in half {
        let on_center = q.left == 0 && q.right == 0;
        if on_center {
            out.push(QuadPoint::node(m, S::zero(), q.weight + q.weight));
            continue;
        }
        out.push(QuadPoint {
            at: q.at,
            weight: q.weight,
            left: m + q.left,
            right: m + q.right,
            frac: q.frac,
        });
        out.push(QuadPoint {
            at: -q.at,
            weight: q.weight,
            left: m - q.left,
            right: m - q.right,
            frac: q.frac,
        });
    }
    out
}

/// Trapezoid rule over uniformly spaced samples.
pub(crate) fn trapezoid<S: Real>(values: &[S], h: S) -> S {
    match values.len() {
        0 | 1 => S::zero(),
        n => {
            let inner: S = values[1..n - 1].iter().copied().sum();
            h * (inner + (values[0] + values[n - 1]) * S::lit(0.5))
        }
    }
}
