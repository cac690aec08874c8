//! Uniform-grid paths.
//!
//! A [`GridPath`] stores `N + 1` rows of a `d`-dimensional path sampled at the
//! nodes `t_k = k * T / N`. Reads past the last node return the last row, which
//! is how every functional in this crate extends a path beyond the horizon.

use std::io::{Read, Write};

use crate::error::{Error, Result};

/// Relative slack used when matching a real time or width onto the grid.
const GRID_SNAP_TOL: f64 = 1e-9;

/// Uniform time grid `0 = t_0 < t_1 < ... < t_N = T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    horizon: f64,
    steps: usize,
}

impl Grid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if steps < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 steps, got {steps}")));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidGrid(format!("horizon must be positive, got {horizon}")));
        }
        Ok(Self { horizon, steps })
    }

    /// Unit-horizon grid with `steps` steps.
    pub fn unit(steps: usize) -> Result<Self> {
        Self::new(1.0, steps)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Number of steps `N`.
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Number of nodes, `N + 1`.
    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    /// Time of node `k`; the last node is exactly `T`.
    pub fn node(&self, k: usize) -> f64 {
        if k >= self.steps {
            self.horizon
        } else {
            k as f64 * self.step()
        }
    }

    /// Index of the node at time `t`.
    pub fn node_index(&self, t: f64) -> Result<usize> {
        let step = self.step();
        let k = (t / step).round();
        if !t.is_finite() || k < 0.0 || k > self.steps as f64 {
            return Err(self.not_a_node(t));
        }
        if (t - k * step).abs() > GRID_SNAP_TOL * self.horizon.max(1.0) {
            return Err(self.not_a_node(t));
        }
        Ok(k as usize)
    }

    /// Integer `m` with `eps = m * step`, `m >= 1`.
    pub fn eps_multiple(&self, eps: f64) -> Result<usize> {
        let step = self.step();
        let m = (eps / step).round();
        if !eps.is_finite() || m < 1.0 || (eps - m * step).abs() > GRID_SNAP_TOL * step * m {
            return Err(Error::EpsNotGridMultiple { eps, step });
        }
        Ok(m as usize)
    }

    fn not_a_node(&self, t: f64) -> Error {
        Error::NotANode {
            t,
            step: self.step(),
            horizon: self.horizon,
        }
    }

    pub(crate) fn ensure_same(&self, other: &Grid, what: &str) -> Result<()> {
        if self.steps != other.steps || self.horizon != other.horizon {
            return Err(Error::GridMismatch(format!(
                "{what}: (T={}, N={}) vs (T={}, N={})",
                self.horizon, self.steps, other.horizon, other.steps
            )));
        }
        Ok(())
    }
}

/// A `d`-dimensional path sampled on a [`Grid`], stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPath {
    grid: Grid,
    dim: usize,
    values: Vec<f64>,
}

impl GridPath {
    pub fn new(grid: Grid, dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension("path dimension must be at least 1".into()));
        }
        if values.len() != grid.len() * dim {
            return Err(Error::InvalidDimension(format!(
                "expected {} values ({} rows x {dim}), got {}",
                grid.len() * dim,
                grid.len(),
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "path entry at row {}, column {}",
                pos / dim,
                pos % dim
            )));
        }
        Ok(Self { grid, dim, values })
    }

    pub fn zeros(grid: Grid, dim: usize) -> Result<Self> {
        Self::new(grid, dim, vec![0.0; grid.len() * dim])
    }

    /// Builds a path by evaluating `f(t, row)` at every node.
    pub fn from_fn(grid: Grid, dim: usize, mut f: impl FnMut(f64, &mut [f64])) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension("path dimension must be at least 1".into()));
        }
        let mut values = vec![0.0; grid.len() * dim];
        for (k, row) in values.chunks_exact_mut(dim).enumerate() {
            f(grid.node(k), row);
        }
        Self::new(grid, dim, values)
    }

    /// Scalar path `t -> f(t)`.
    pub fn scalar_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_fn(grid, 1, |t, row| row[0] = f(t))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Row `k`, clamped to the last node for `k > N`.
    #[inline]
    pub fn row(&self, k: usize) -> &[f64] {
        let k = k.min(self.grid.steps);
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    /// Entry `(k, i)` with the same clamping as [`GridPath::row`].
    #[inline]
    pub fn at(&self, k: usize, i: usize) -> f64 {
        let k = k.min(self.grid.steps);
        self.values[k * self.dim + i]
    }

    /// Value of a scalar path at node `k` (clamped).
    #[inline]
    pub fn scalar(&self, k: usize) -> f64 {
        self.at(k, 0)
    }

    pub fn component(&self, i: usize) -> Result<GridPath> {
        if i >= self.dim {
            return Err(Error::InvalidDimension(format!("component {i} out of range for dim {}", self.dim)));
        }
        let values = self.values.chunks_exact(self.dim).map(|r| r[i]).collect();
        GridPath::new(self.grid, 1, values)
    }

    /// `c * X`.
    pub fn scaled(&self, c: f64) -> GridPath {
        GridPath {
            grid: self.grid,
            dim: self.dim,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    /// Time reversal `t -> X_{T - t}`.
    pub fn reversed(&self) -> GridPath {
        let values = self.values.chunks_exact(self.dim).rev().flatten().copied().collect();
        GridPath {
            grid: self.grid,
            dim: self.dim,
            values,
        }
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Writes `t,x1,...,xd` with 17 significant digits per value.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["t".to_string()];
        header.extend((1..=self.dim).map(|i| format!("x{i}")));
        w.write_record(&header)?;
        for k in 0..self.grid.len() {
            let mut rec = Vec::with_capacity(self.dim + 1);
            rec.push(fmt_f64(self.grid.node(k)));
            rec.extend(self.row(k).iter().map(|v| fmt_f64(*v)));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the format written by [`GridPath::write_csv`]. The grid is
    /// recovered from the time column, which must be uniform and start at 0.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers()?.clone();
        if header.get(0) != Some("t") || header.len() < 2 {
            return Err(Error::Malformed("path CSV header must be t,x1,...,xd".into()));
        }
        let dim = header.len() - 1;
        let mut times = Vec::new();
        let mut values = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            if rec.len() != dim + 1 {
                return Err(Error::Malformed(format!("row with {} fields, expected {}", rec.len(), dim + 1)));
            }
            times.push(parse_f64(&rec[0])?);
            for field in rec.iter().skip(1) {
                values.push(parse_f64(field)?);
            }
        }
        if times.len() < 3 {
            return Err(Error::Malformed("path CSV needs at least 3 rows".into()));
        }
        let steps = times.len() - 1;
        let grid = Grid::new(times[steps], steps)?;
        for (k, t) in times.iter().enumerate() {
            if (t - grid.node(k)).abs() > 1e-9 * grid.horizon().max(1.0) {
                return Err(Error::Malformed(format!("time column not uniform at row {k}")));
            }
        }
        GridPath::new(grid, dim, values)
    }
}

/// A path of `rows x cols` matrices on a grid, each node stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixPath {
    grid: Grid,
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl MatrixPath {
    pub fn new(grid: Grid, rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidDimension("matrix path needs positive shape".into()));
        }
        if data.len() != grid.len() * rows * cols {
            return Err(Error::InvalidDimension(format!(
                "expected {} entries for {} nodes of {rows}x{cols}, got {}",
                grid.len() * rows * cols,
                grid.len(),
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix path entry".into()));
        }
        Ok(Self { grid, rows, cols, data })
    }

    pub fn zeros(grid: Grid, rows: usize, cols: usize) -> Result<Self> {
        Self::new(grid, rows, cols, vec![0.0; grid.len() * rows * cols])
    }

    /// Builds a matrix path by evaluating `f(k, out)` at every node index.
    pub fn from_fn(grid: Grid, rows: usize, cols: usize, mut f: impl FnMut(usize, &mut [f64])) -> Result<Self> {
        let mut data = vec![0.0; grid.len() * rows * cols];
        if rows * cols == 0 {
            return Err(Error::InvalidDimension("matrix path needs positive shape".into()));
        }
        for (k, m) in data.chunks_exact_mut(rows * cols).enumerate() {
            f(k, m);
        }
        Self::new(grid, rows, cols, data)
    }

    /// Reinterprets a `GridPath` of dimension `rows * cols` as a matrix path.
    pub fn from_flat(path: &GridPath, rows: usize, cols: usize) -> Result<Self> {
        if path.dim() != rows * cols {
            return Err(Error::InvalidDimension(format!(
                "cannot view a {}-dimensional path as {rows}x{cols} matrices",
                path.dim()
            )));
        }
        Self::new(*path.grid(), rows, cols, path.values().to_vec())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Matrix at node `k` (clamped), row-major.
    #[inline]
    pub fn at(&self, k: usize) -> &[f64] {
        let k = k.min(self.grid.steps());
        let sz = self.rows * self.cols;
        &self.data[k * sz..(k + 1) * sz]
    }

    pub fn scaled(&self, c: f64) -> MatrixPath {
        MatrixPath {
            data: self.data.iter().map(|v| c * v).collect(),
            ..self.clone()
        }
    }

    /// Adds `c` to every entry.
    pub fn shifted(&self, c: f64) -> MatrixPath {
        MatrixPath {
            data: self.data.iter().map(|v| v + c).collect(),
            ..self.clone()
        }
    }

    pub fn reversed(&self) -> MatrixPath {
        let sz = self.rows * self.cols;
        MatrixPath {
            data: self.data.chunks_exact(sz).rev().flatten().copied().collect(),
            ..self.clone()
        }
    }

    /// Flattens to a `GridPath` of dimension `rows * cols`.
    pub fn to_flat(&self) -> GridPath {
        GridPath {
            grid: self.grid,
            dim: self.rows * self.cols,
            values: self.data.clone(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Hölder seminorm estimate `max |X_t - X_s| / |t - s|^alpha` over grid pairs.
///
/// All pairs are visited when `(N + 1)^2 <= pair_budget`; otherwise only the
/// dyadic lags `1, 2, 4, ..., N` are scanned, across every start index.
pub fn holder_seminorm(x: &GridPath, alpha: f64, pair_budget: usize) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParameter(format!("Hölder exponent must lie in (0, 1], got {alpha}")));
    }
    let grid = x.grid();
    let n = grid.steps();
    let step = grid.step();
    let mut best = 0.0_f64;
    let mut scan_lag = |lag: usize| {
        let denom = (lag as f64 * step).powf(alpha);
        for j in 0..=(n - lag) {
            let dist = euclid_diff(x.row(j + lag), x.row(j));
            let ratio = if dist == 0.0 { 0.0 } else { dist / denom };
            best = best.max(ratio);
        }
    };
    if (n + 1).saturating_mul(n + 1) <= pair_budget {
        for lag in 1..=n {
            scan_lag(lag);
        }
    } else {
        for lag in dyadic_lags(n) {
            scan_lag(lag);
        }
    }
    Ok(best)
}

/// `1, 2, 4, ...` up to and including `n`.
pub(crate) fn dyadic_lags(n: usize) -> Vec<usize> {
    let mut lags = Vec::new();
    let mut lag = 1;
    while lag < n {
        lags.push(lag);
        lag *= 2;
    }
    lags.push(n);
    lags
}

/// Pointwise image `Y_k = f(X_k)`, optionally with the gradient path `(grad f)(X_k)`.
pub fn apply_fn(
    x: &GridPath,
    f: &dyn Fn(&[f64]) -> f64,
    grad_f: Option<&dyn Fn(&[f64], &mut [f64])>,
) -> Result<(GridPath, Option<GridPath>)> {
    let grid = *x.grid();
    let d = x.dim();
    let mut y = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        let v = f(x.row(k));
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("f(X) at node {k}")));
        }
        y.push(v);
    }
    let y = GridPath::new(grid, 1, y)?;
    let grad = match grad_f {
        None => None,
        Some(g) => {
            let mut vals = vec![0.0; grid.len() * d];
            for (k, out) in vals.chunks_exact_mut(d).enumerate() {
                g(x.row(k), out);
            }
            Some(GridPath::new(grid, d, vals).map_err(|_| Error::NonFinite("grad f(X)".into()))?)
        }
    };
    Ok((y, grad))
}

#[inline]
pub(crate) fn euclid_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}

/// Formats with 17 significant digits.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub(crate) fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|e| Error::Malformed(format!("bad number {s:?}: {e}")))
}
