//! Periodic grid functions on the unit circle and their discrete calculus.

use std::io::{Read, Write};

use crate::error::{LabError, Result};
use crate::io::fmt_real;

/// Maps any real to its representative in `[0, 1)`.
pub fn wrap_torus(x: f64) -> f64 {
    let y = x - x.floor();
    // x slightly below an integer can round up to exactly 1.0
    if y >= 1.0 {
        0.0
    } else {
        y
    }
}

/// Geodesic distance on the unit circle.
pub fn torus_dist(a: f64, b: f64) -> f64 {
    let d = wrap_torus(a - b);
    d.min(1.0 - d)
}

/// Uniform grid `x_i = i / n` on the unit circle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TorusGrid {
    n: usize,
}

impl TorusGrid {
    pub const MIN_NODES: usize = 16;

    pub fn new(n: usize) -> Result<Self> {
        if n < Self::MIN_NODES {
            return Err(LabError::GridTooSmall {
                n,
                min: Self::MIN_NODES,
            });
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Node coordinate, computed as `i / n` so that node `n` would land on 1 exactly.
    pub fn node(&self, i: usize) -> f64 {
        (i % self.n) as f64 / self.n as f64
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.node(i))
    }

    /// Periodic index arithmetic.
    pub fn wrap_index(&self, i: isize) -> usize {
        i.rem_euclid(self.n as isize) as usize
    }

    /// Index of the node closest to `x` (ties go to the lower node).
    pub fn nearest_node(&self, x: f64) -> usize {
        let s = wrap_torus(x) * self.n as f64;
        (s.round() as usize) % self.n
    }
}

/// Samples of a scalar function at the nodes of a [`TorusGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFn {
    grid: TorusGrid,
    values: Vec<f64>,
}

impl GridFn {
    pub fn new(grid: TorusGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(LabError::LengthMismatch {
                expected: grid.n(),
                got: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(LabError::NonFiniteValue { index });
        }
        Ok(Self { grid, values })
    }

    /// Samples `f` at every node. Panics if `f` produces a non-finite value.
    pub fn from_fn(grid: TorusGrid, f: impl Fn(f64) -> f64) -> Self {
        let values: Vec<f64> = grid.nodes().map(f).collect();
        Self::new(grid, values).expect("sampled function must be finite")
    }

    pub fn constant(grid: TorusGrid, c: f64) -> Self {
        Self::from_fn(grid, |_| c)
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at a periodic index.
    pub fn at(&self, i: isize) -> f64 {
        self.values[self.grid.wrap_index(i)]
    }

    /// `(left, right) = ((f_i - f_{i-1}) / h, (f_{i+1} - f_i) / h)` with periodic wrap.
    pub fn one_sided_slopes(&self, i: usize) -> (f64, f64) {
        let n = self.grid.n() as f64;
        let i = i as isize;
        let c = self.at(i);
        ((c - self.at(i - 1)) * n, (self.at(i + 1) - c) * n)
    }

    pub fn central_slope(&self, i: usize) -> f64 {
        let (l, r) = self.one_sided_slopes(i);
        0.5 * (l + r)
    }

    /// Piecewise-linear periodic interpolation.
    pub fn interpolate(&self, x: f64) -> f64 {
        let n = self.grid.n();
        let s = wrap_torus(x) * n as f64;
        let k = s.floor();
        let frac = s - k;
        let i = (k as usize) % n;
        let j = (i + 1) % n;
        (1.0 - frac) * self.values[i] + frac * self.values[j]
    }

    /// Slope of the interpolant on the cell containing `x`.
    pub fn interpolant_slope(&self, x: f64) -> f64 {
        let n = self.grid.n();
        let i = ((wrap_torus(x) * n as f64).floor() as usize) % n;
        (self.values[(i + 1) % n] - self.values[i]) * n as f64
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// `max_i |f_i - g_i|`.
    pub fn sup_dist(&self, other: &GridFn) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())))
    }

    /// Largest value of `f_i - g_i` (positive when `f` exceeds `g` somewhere).
    pub fn max_excess_over(&self, other: &GridFn) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(f64::NEG_INFINITY, |m, (a, b)| m.max(a - b)))
    }

    pub fn check_same_grid(&self, other: &GridFn) -> Result<()> {
        if self.grid != other.grid {
            return Err(LabError::GridMismatch {
                left: self.grid.n(),
                right: other.grid.n(),
            });
        }
        Ok(())
    }

    /// `(f_{i+1} - 2 f_i + f_{i-1}) / h^2` at every node.
    pub fn second_differences(&self) -> Vec<f64> {
        let n2 = (self.grid.n() * self.grid.n()) as f64;
        (0..self.grid.n() as isize)
            .map(|i| (self.at(i + 1) - 2.0 * self.at(i) + self.at(i - 1)) * n2)
            .collect()
    }

    /// Upper one-sided second-difference bound. Stays bounded under grid
    /// refinement for semiconcave data and grows like `1/h` at convex kinks.
    pub fn semiconcavity_profile(&self) -> f64 {
        self.second_differences()
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Pointwise map, keeping the grid.
    pub fn map(&self, f: impl Fn(f64, f64) -> f64) -> Result<GridFn> {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| f(self.grid.node(i), v))
            .collect();
        GridFn::new(self.grid, values)
    }

    /// Writes `x,value` rows with a header.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "x,value")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(out, "{},{}", fmt_real(self.grid.node(i)), fmt_real(*v))?;
        }
        Ok(())
    }

    /// Parses the `x,value` format written by [`GridFn::write_csv`].
    ///
    /// The node count is taken from the number of rows; every `x` must sit on
    /// the corresponding uniform node to within `1e-9`.
    pub fn read_csv<R: Read>(input: R) -> Result<GridFn> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(input);
        let headers = reader.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "x" || &headers[1] != "value" {
            return Err(LabError::Csv(format!(
                "expected header 'x,value', found '{}'",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut xs = Vec::new();
        let mut values = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let record = record?;
            if record.len() != 2 {
                return Err(LabError::Csv(format!("row {row}: expected 2 fields")));
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| LabError::Csv(format!("row {row}: '{s}': {e}")))
            };
            xs.push(parse(&record[0])?);
            values.push(parse(&record[1])?);
        }
        let grid = TorusGrid::new(values.len())?;
        for (i, &x) in xs.iter().enumerate() {
            if !x.is_finite() || (x - grid.node(i)).abs() > 1e-9 {
                return Err(LabError::Csv(format!(
                    "row {i}: x = {x} is not node {} of a {}-node grid",
                    grid.node(i),
                    grid.n()
                )));
            }
        }
        GridFn::new(grid, values)
    }
}
