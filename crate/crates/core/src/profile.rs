//! Sampled fields on a truncated, symmetric time axis.
//!
//! A [`Profile`] holds node values on a [`Grid`] together with the constant
//! limits the field takes outside `[-T, T]`. Evaluation between nodes is
//! linear; evaluation outside the grid returns the tail constant.

use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Smallest admissible half width; Gaussian kernels with `gamma >= 1` lose
/// less than `1e-10` of their mass beyond this distance.
pub const MIN_HALF_WIDTH: f64 = 5.0;

/// Relative tolerance used when verifying a declared parity.
pub const PARITY_TOL: f64 = 1e-12;

/// Uniform grid `t_i = -T + i·step`, symmetric about zero with `t = 0` a node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid<S> {
    half_width: S,
    n_points: usize,
    step: S,
}

impl<S: Real> Grid<S> {
    pub fn new(half_width: S, n_points: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width >= S::lit(MIN_HALF_WIDTH)) {
            return Err(Error::Grid(format!(
                "half width must be finite and at least {MIN_HALF_WIDTH}, got {half_width}"
            )));
        }
        if n_points.is_multiple_of(2) || n_points < 5 {
            return Err(Error::Grid(format!(
                "n_points must be odd and at least 5, got {n_points}"
            )));
        }
        let m = (n_points - 1) / 2;
        Ok(Grid {
            half_width,
            n_points,
            step: half_width / S::from_usize_lossy(m),
        })
    }

    pub fn half_width(&self) -> S {
        self.half_width
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn step(&self) -> S {
        self.step
    }

    /// Index of the node at `t = 0`, which is also the number of cells on each half line.
    pub fn half_count(&self) -> usize {
        (self.n_points - 1) / 2
    }

    /// Node `t_i`. Computed as `(i - m)·step` so that `t_i = -t_{n-1-i}` holds bit for bit.
    #[inline]
    pub fn node(&self, i: usize) -> S {
        let m = self.half_count();
        if i >= m {
            self.half_node(i - m)
        } else {
            -self.half_node(m - i)
        }
    }

    /// Node `j·step` on the half line.
    #[inline]
    pub fn half_node(&self, j: usize) -> S {
        S::from_usize_lossy(j) * self.step
    }

    pub fn nodes(&self) -> impl Iterator<Item = S> + '_ {
        (0..self.n_points).map(move |i| self.node(i))
    }

    /// Index of the node nearest to `t`, clamped to the grid.
    pub fn nearest(&self, t: S) -> usize {
        let x = ((t + self.half_width) / self.step).round();
        x.max(S::zero())
            .to_usize()
            .unwrap_or(0)
            .min(self.n_points - 1)
    }

    pub fn same_as(&self, other: &Grid<S>) -> bool {
        self.n_points == other.n_points && self.half_width == other.half_width
    }
}

/// Limits of a field as `t -> -inf` and `t -> +inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailModel<S> {
    pub left_limit: S,
    pub right_limit: S,
}

impl<S: Real> TailModel<S> {
    pub fn new(left_limit: S, right_limit: S) -> Self {
        TailModel {
            left_limit,
            right_limit,
        }
    }

    /// Closed-string boundary values `(1, 1)`.
    pub fn closed() -> Self {
        Self::new(S::one(), S::one())
    }

    /// Open-string boundary values for odd powers, `(-1, 1)`.
    pub fn open_odd() -> Self {
        Self::new(-S::one(), S::one())
    }

    /// Open-string boundary values for even powers, `(0, 1)`.
    pub fn open_even() -> Self {
        Self::new(S::zero(), S::one())
    }

    pub fn constant(c: S) -> Self {
        Self::new(c, c)
    }

    pub fn map(&self, f: impl Fn(S) -> S) -> Self {
        Self::new(f(self.left_limit), f(self.right_limit))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    /// `+1` for even, `-1` for odd.
    pub fn sign<S: Real>(self) -> S {
        match self {
            Parity::Even => S::one(),
            Parity::Odd => -S::one(),
        }
    }
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
        })
    }
}

impl FromStr for Parity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "even" => Ok(Parity::Even),
            "odd" => Ok(Parity::Odd),
            other => Err(Error::Format(format!("unknown parity '{other}'"))),
        }
    }
}

/// A field sampled on a grid, with constant tails and an optional declared parity.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile<S> {
    grid: Grid<S>,
    values: Vec<S>,
    tails: TailModel<S>,
    parity: Option<Parity>,
}

impl<S: Real> Profile<S> {
    /// Builds a profile, checking finiteness and (when declared) parity of values and tails.
    pub fn new(
        grid: Grid<S>,
        values: Vec<S>,
        tails: TailModel<S>,
        parity: Option<Parity>,
    ) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::Grid(format!(
                "expected {} values, got {}",
                grid.n_points(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Sample {
                index: i,
                t: grid.node(i).to_f64().unwrap_or(f64::NAN),
            });
        }
        if !(tails.left_limit.is_finite() && tails.right_limit.is_finite()) {
            return Err(Error::Format("tail limits must be finite".into()));
        }
        let profile = Profile {
            grid,
            values,
            tails,
            parity,
        };
        if let Some(p) = parity {
            profile.check_parity(p)?;
        }
        Ok(profile)
    }

    /// Constant profile `c` with tails `(c, c)`, declared even.
    pub fn constant(grid: Grid<S>, c: S) -> Self {
        Profile {
            grid,
            values: vec![c; grid.n_points()],
            tails: TailModel::constant(c),
            parity: Some(Parity::Even),
        }
    }

    /// Assembles a profile of the given parity from its half-line values (`t >= 0`).
    pub fn from_half(
        grid: Grid<S>,
        half: &[S],
        tails: TailModel<S>,
        parity: Parity,
    ) -> Result<Self> {
        let m = grid.half_count();
        if half.len() != m + 1 {
            return Err(Error::Grid(format!(
                "expected {} half-line values, got {}",
                m + 1,
                half.len()
            )));
        }
        let s: S = parity.sign();
        let mut values = Vec::with_capacity(grid.n_points());
        values.extend(half[1..].iter().rev().map(|&v| s * v));
        values.extend_from_slice(half);
        if parity == Parity::Odd {
            values[m] = S::zero();
        }
        Profile::new(grid, values, tails, Some(parity))
    }

    fn check_parity(&self, parity: Parity) -> Result<()> {
        let tol = S::lit(PARITY_TOL);
        let s: S = parity.sign();
        let n = self.values.len();
        for i in 0..n / 2 + 1 {
            let a = self.values[i];
            let b = self.values[n - 1 - i];
            if (a - s * b).abs() > tol * (S::one() + a.abs()) {
                return Err(Error::Parity(format!(
                    "declared {parity} but values at t = {} differ: {a} vs {b}",
                    self.grid.node(i)
                )));
            }
        }
        let (l, r) = (self.tails.left_limit, self.tails.right_limit);
        if (l - s * r).abs() > tol * (S::one() + l.abs()) {
            return Err(Error::Parity(format!(
                "declared {parity} but tails ({l}, {r}) are inconsistent"
            )));
        }
        Ok(())
    }

    pub fn grid(&self) -> &Grid<S> {
        &self.grid
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    /// Values at `t >= 0` (index 0 is `t = 0`).
    pub fn half_values(&self) -> &[S] {
        &self.values[self.grid.half_count()..]
    }

    pub fn tails(&self) -> TailModel<S> {
        self.tails
    }

    pub fn parity(&self) -> Option<Parity> {
        self.parity
    }

    pub fn into_values(self) -> Vec<S> {
        self.values
    }

    /// Copy with the declared parity replaced (verified when `Some`).
    pub fn with_parity(&self, parity: Option<Parity>) -> Result<Self> {
        Profile::new(self.grid, self.values.clone(), self.tails, parity)
    }

    /// Pointwise image `f(value)`, applied to the tails as well. Parity is dropped.
    pub fn map(&self, f: impl Fn(S) -> S) -> Result<Self> {
        Profile::new(
            self.grid,
            self.values.iter().map(|&v| f(v)).collect(),
            self.tails.map(&f),
            None,
        )
    }

    /// Pointwise image `f(t, value)` on nodes, with explicitly given tails.
    pub fn map_with_t(&self, tails: TailModel<S>, f: impl Fn(S, S) -> S) -> Result<Self> {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| f(self.grid.node(i), v))
            .collect();
        Profile::new(self.grid, values, tails, None)
    }

    /// Linear interpolation inside `[-T, T]`, tail constants outside.
    pub fn evaluate(&self, t: S) -> S {
        let big_t = self.grid.half_width();
        if t > big_t {
            return self.tails.right_limit;
        }
        if t < -big_t {
            return self.tails.left_limit;
        }
        let x = (t + big_t) / self.grid.step();
        let last = self.grid.n_points() - 1;
        let i = x.floor().to_usize().unwrap_or(0).min(last - 1);
        let frac = x - S::from_usize_lossy(i);
        self.values[i] * (S::one() - frac) + self.values[i + 1] * frac
    }

    pub fn max_abs(&self) -> S {
        self.values
            .iter()
            .fold(S::zero(), |acc, v| acc.max(v.abs()))
    }

    /// Writes the profile as CSV: a `#` metadata line, a `t,value` header, one row per node.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "# half_width={},n_points={},left_tail={},right_tail={},parity={}",
            self.grid.half_width(),
            self.grid.n_points(),
            self.tails.left_limit,
            self.tails.right_limit,
            self.parity.map_or("none".to_string(), |p| p.to_string())
        )?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "value"])?;
        for (t, v) in self.grid.nodes().zip(&self.values) {
            w.write_record([t.to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut reader = BufReader::new(input);
        let mut meta = String::new();
        reader.read_line(&mut meta)?;
        let meta = meta
            .trim()
            .strip_prefix('#')
            .ok_or_else(|| Error::Format("missing '#' metadata line".into()))?;
        let mut half_width = None;
        let mut n_points = None;
        let mut left = None;
        let mut right = None;
        let mut parity = None;
        for item in meta.split(',') {
            let (key, value) = item
                .trim()
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("bad metadata item '{item}'")))?;
            match key {
                "half_width" => half_width = Some(parse_scalar::<S>(value)?),
                "n_points" => {
                    n_points = Some(value.parse::<usize>().map_err(|e| {
                        Error::Format(format!("n_points '{value}': {e}"))
                    })?)
                }
                "left_tail" => left = Some(parse_scalar::<S>(value)?),
                "right_tail" => right = Some(parse_scalar::<S>(value)?),
                "parity" => {
                    parity = Some(match value {
                        "none" => None,
                        other => Some(other.parse::<Parity>()?),
                    })
                }
                other => return Err(Error::Format(format!("unknown metadata key '{other}'"))),
            }
        }
        let missing = |k: &str| Error::Format(format!("metadata is missing '{k}'"));
        let grid = Grid::new(
            half_width.ok_or_else(|| missing("half_width"))?,
            n_points.ok_or_else(|| missing("n_points"))?,
        )?;
        let tails = TailModel::new(
            left.ok_or_else(|| missing("left_tail"))?,
            right.ok_or_else(|| missing("right_tail"))?,
        );
        let mut values = Vec::with_capacity(grid.n_points());
        let mut rows = csv::Reader::from_reader(reader);
        for (i, record) in rows.records().enumerate() {
            let record = record?;
            let t = parse_scalar::<S>(record.get(0).unwrap_or(""))?;
            if (t - grid.node(i)).abs() > grid.step() * S::lit(1e-6) {
                return Err(Error::Format(format!(
                    "row {i}: t = {t} does not match grid node {}",
                    grid.node(i)
                )));
            }
            values.push(parse_scalar::<S>(record.get(1).unwrap_or(""))?);
        }
        Profile::new(grid, values, tails, parity.flatten())
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

fn parse_scalar<S: Real>(s: &str) -> Result<S> {
    let x: f64 = s
        .trim()
        .parse()
        .map_err(|e| Error::Format(format!("'{s}' is not a number: {e}")))?;
    S::from_f64(x).ok_or_else(|| Error::Format(format!("'{s}' not representable")))
}

/// Samples `f` at every node of `grid`.
pub fn sample<S: Real>(
    f: impl Fn(S) -> S,
    grid: &Grid<S>,
    tails: TailModel<S>,
    parity: Option<Parity>,
) -> Result<Profile<S>> {
    let mut values = Vec::with_capacity(grid.n_points());
    for (i, t) in grid.nodes().enumerate() {
        let v = f(t);
        if !v.is_finite() {
            return Err(Error::Sample {
                index: i,
                t: t.to_f64().unwrap_or(f64::NAN),
            });
        }
        values.push(v);
    }
    Profile::new(*grid, values, tails, parity)
}

/// `max_i |a_i - b_i|` over the shared grid.
pub fn sup_diff<S: Real>(a: &Profile<S>, b: &Profile<S>) -> Result<S> {
    if !a.grid().same_as(b.grid()) {
        return Err(Error::Grid("profiles live on different grids".into()));
    }
    Ok(a.values()
        .iter()
        .zip(b.values())
        .fold(S::zero(), |acc, (x, y)| acc.max((*x - *y).abs())))
}

/// Sign function with `sgn(0) = 0`.
pub fn sgn<S: Real>(t: S) -> S {
    if t > S::zero() {
        S::one()
    } else if t < S::zero() {
        -S::one()
    } else {
        S::zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid<f64> {
        Grid::new(10.0, 2001).unwrap()
    }

    #[test]
    fn grid_is_exactly_symmetric() {
        let g = grid();
        for i in 0..g.n_points() {
            assert_eq!(g.node(i) + g.node(g.n_points() - 1 - i), 0.0);
        }
        assert_eq!(g.node(g.half_count()), 0.0);
        assert_eq!(g.node(0), -10.0);
        assert_eq!(g.node(2000), 10.0);
        assert!((g.step() - 0.01).abs() < 1e-15);
    }

    #[test]
    fn grid_rejects_even_counts_and_narrow_widths() {
        assert!(matches!(Grid::new(10.0f64, 2000), Err(Error::Grid(_))));
        assert!(matches!(Grid::new(4.0f64, 2001), Err(Error::Grid(_))));
        assert!(matches!(Grid::new(f64::NAN, 2001), Err(Error::Grid(_))));
    }

    #[test]
    fn sign_function_is_odd_with_unit_tails() {
        let p = sample(sgn, &grid(), TailModel::open_odd(), Some(Parity::Odd)).unwrap();
        assert!(p.values().iter().all(|v| [-1.0, 0.0, 1.0].contains(v)));
        assert_eq!(p.evaluate(0.0), 0.0);
        assert_eq!(p.evaluate(11.0), 1.0);
        assert_eq!(p.evaluate(-11.0), -1.0);
    }

    #[test]
    fn constant_profile_has_constant_tails() {
        let p = sample(|_| 1.0, &grid(), TailModel::closed(), Some(Parity::Even)).unwrap();
        assert!(p.values().iter().all(|&v| v == 1.0));
        assert_eq!(p.tails(), TailModel::closed());
    }

    #[test]
    fn gaussian_initial_guess_is_even_with_minus_one_at_origin() {
        let p = sample(
            |t: f64| 1.0 - 2.0 * (-0.1 * t * t).exp(),
            &grid(),
            TailModel::closed(),
            Some(Parity::Even),
        )
        .unwrap();
        assert_eq!(p.evaluate(0.0), -1.0);
    }

    #[test]
    fn evaluate_interpolates_linearly_between_nodes() {
        let g = grid();
        let p = sample(|t: f64| if t > 0.0 { 1.0 } else { 0.0 }, &g, TailModel::open_even(), None)
            .unwrap();
        assert!((p.evaluate(0.5 * g.step()) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn sample_rejects_non_finite_values() {
        let err = sample(|t: f64| 1.0 / t, &grid(), TailModel::closed(), None).unwrap_err();
        assert!(matches!(err, Error::Sample { index: 1000, .. }));
    }

    #[test]
    fn declared_parity_is_verified() {
        let err = sample(|t: f64| t + 0.1, &grid(), TailModel::open_odd(), Some(Parity::Odd));
        assert!(matches!(err, Err(Error::Parity(_))));
        let err = sample(|t: f64| t.tanh(), &grid(), TailModel::closed(), Some(Parity::Odd));
        assert!(matches!(err, Err(Error::Parity(_))));
    }

    #[test]
    fn sup_diff_basics() {
        let g = grid();
        let one = Profile::constant(g, 1.0);
        let near = Profile::constant(g, 0.9);
        assert_eq!(sup_diff(&one, &one).unwrap(), 0.0);
        assert!((sup_diff(&one, &near).unwrap() - 0.1).abs() < 1e-15);
        let other = Profile::constant(Grid::new(10.0, 201).unwrap(), 1.0);
        assert!(matches!(sup_diff(&one, &other), Err(Error::Grid(_))));
    }

    #[test]
    fn from_half_mirrors_values() {
        let g = Grid::new(5.0f64, 11).unwrap();
        let half = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
        let p = Profile::from_half(g, &half, TailModel::open_odd(), Parity::Odd).unwrap();
        assert_eq!(p.values()[0], -5.0);
        assert_eq!(p.values()[10], 5.0);
        assert_eq!(p.half_values(), &half);
    }

    #[test]
    fn csv_round_trip_preserves_everything() {
        let g = Grid::new(6.0f64, 61).unwrap();
        let p = sample(|t: f64| (0.3 * t).tanh(), &g, TailModel::open_odd(), Some(Parity::Odd))
            .unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(
            "# half_width=6,n_points=61,left_tail=-1,right_tail=1,parity=odd\nt,value\n"
        ));
        let back = Profile::<f64>::read_csv(&buf[..]).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn csv_reader_rejects_missing_metadata() {
        let text = "t,value\n0,1\n";
        assert!(matches!(
            Profile::<f64>::read_csv(text.as_bytes()),
            Err(Error::Format(_))
        ));
    }
}
