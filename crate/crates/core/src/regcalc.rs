//! Regularization functionals.
//!
//! Every functional here has the shape
//!
//! ```text
//! (1/eps) * int_0^t  g(s, s + eps) ds
//! ```
//!
//! evaluated as a left Riemann sum over grid nodes `s = t_0, ..., t_{n-1}`
//! with `eps = m * step`, so the sum is `(1/m) * sum_{k < n} g(k, k + m)`.
//! Reads beyond `T` clamp to the last node. The discrete Itô and Stratonovich
//! sums used as reference values live at the bottom of the module.

use std::io::Write;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::path::{fmt_f64, Grid, GridPath, MatrixPath};

/// Strictly decreasing regularization widths `eps_i = m_i * step`.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsSchedule {
    step: f64,
    multiples: Vec<usize>,
}

impl EpsSchedule {
    pub fn new(grid: &Grid, multiples: Vec<usize>) -> Result<Self> {
        if multiples.is_empty() {
            return Err(Error::InvalidParameter("empty eps schedule".into()));
        }
        if multiples.contains(&0) {
            return Err(Error::InvalidParameter("eps multiples must be >= 1".into()));
        }
        if multiples.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::InvalidParameter(format!("eps multiples must be strictly decreasing: {multiples:?}")));
        }
        if multiples[0] > grid.steps() {
            return Err(Error::InvalidParameter(format!(
                "coarsest eps multiple {} exceeds N = {}",
                multiples[0],
                grid.steps()
            )));
        }
        Ok(Self {
            step: grid.step(),
            multiples,
        })
    }

    /// `m_i = finest * 2^(K - i)` for `i = 1..=K`.
    pub fn dyadic(grid: &Grid, levels: usize, finest: usize) -> Result<Self> {
        if levels == 0 || finest == 0 {
            return Err(Error::InvalidParameter("dyadic schedule needs levels >= 1 and finest >= 1".into()));
        }
        let multiples = (1..=levels)
            .map(|i| finest.checked_shl((levels - i) as u32).unwrap_or(usize::MAX))
            .collect();
        Self::new(grid, multiples)
    }

    /// Default schedule: `K` dyadic levels ending at `eps = step`.
    pub fn with_levels(grid: &Grid, levels: usize) -> Result<Self> {
        Self::dyadic(grid, levels, 1)
    }

    pub fn multiples(&self) -> &[usize] {
        &self.multiples
    }

    pub fn eps(&self) -> Vec<f64> {
        self.multiples.iter().map(|&m| m as f64 * self.step).collect()
    }

    pub fn len(&self) -> usize {
        self.multiples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.multiples.is_empty()
    }

    pub fn finest(&self) -> usize {
        *self.multiples.last().expect("non-empty schedule")
    }
}

/// Values of one functional on one path across an eps schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSeries {
    pub functional: String,
    pub rows: usize,
    pub cols: usize,
    /// `(eps, t, row-major value)`.
    pub entries: Vec<(f64, f64, Vec<f64>)>,
}

impl EvalSeries {
    pub fn new(functional: impl Into<String>, rows: usize, cols: usize) -> Self {
        Self {
            functional: functional.into(),
            rows,
            cols,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, eps: f64, t: f64, value: Vec<f64>) -> Result<()> {
        if value.len() != self.rows * self.cols {
            return Err(Error::InvalidDimension(format!(
                "series value has {} entries, expected {}",
                value.len(),
                self.rows * self.cols
            )));
        }
        if value.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("{} at eps {eps}, t {t}", self.functional)));
        }
        self.entries.push((eps, t, value));
        Ok(())
    }

    /// `eps,t,value` for scalars, `eps,t,row,col,value` otherwise.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let scalar = self.rows * self.cols == 1;
        if scalar {
            w.write_record(["eps", "t", "value"])?;
        } else {
            w.write_record(["eps", "t", "value", "row", "col"])?;
        }
        for (eps, t, value) in &self.entries {
            if scalar {
                w.write_record([fmt_f64(*eps), fmt_f64(*t), fmt_f64(value[0])])?;
            } else {
                for (idx, v) in value.iter().enumerate() {
                    w.write_record([
                        fmt_f64(*eps),
                        fmt_f64(*t),
                        fmt_f64(*v),
                        (idx / self.cols).to_string(),
                        (idx % self.cols).to_string(),
                    ])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Resolved `(m, n)` for a width and a node.
pub(crate) fn resolve(grid: &Grid, eps: f64, t: f64) -> Result<(usize, usize)> {
    Ok((grid.eps_multiple(eps)?, grid.node_index(t)?))
}

fn require_scalar(x: &GridPath, what: &str) -> Result<()> {
    if x.dim() != 1 {
        return Err(Error::InvalidDimension(format!("{what} must be scalar, got dim {}", x.dim())));
    }
    Ok(())
}

/// `(1/m) * sum_{k < n} term(k, k + m)`.
#[inline]
pub(crate) fn reg_sum(n: usize, m: usize, mut term: impl FnMut(usize, usize) -> f64) -> f64 {
    let mut acc = 0.0;
    for k in 0..n {
        acc += term(k, k + m);
    }
    acc / m as f64
}

/// Vector-valued [`reg_sum`]: `term` adds its contribution into the buffer.
#[inline]
pub(crate) fn reg_sum_into(n: usize, m: usize, out: &mut [f64], mut term: impl FnMut(usize, usize, &mut [f64])) {
    out.fill(0.0);
    for k in 0..n {
        term(k, k + m, out);
    }
    let inv = 1.0 / m as f64;
    out.iter_mut().for_each(|v| *v *= inv);
}

/// Values of a scalar regularized sum at every node `n = 0..=N`.
pub(crate) fn reg_sweep(steps: usize, m: usize, mut term: impl FnMut(usize, usize) -> f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(steps + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 0..steps {
        acc += term(k, k + m);
        out.push(acc / m as f64);
    }
    out
}

/// Increment `X_b - X_a` of component `i` with clamped reads.
#[inline]
fn inc(x: &GridPath, i: usize, a: usize, b: usize) -> f64 {
    x.at(b, i) - x.at(a, i)
}

pub(crate) fn c_eps_m(x1: &GridPath, x2: &GridPath, m: usize, n: usize) -> f64 {
    reg_sum(n, m, |a, b| inc(x1, 0, a, b) * inc(x2, 0, a, b))
}

/// Covariation approximation `C(eps, X1, X2)(t)` for scalar paths.
pub fn c_eps(x1: &GridPath, x2: &GridPath, eps: f64, t: f64) -> Result<f64> {
    require_scalar(x1, "X1")?;
    require_scalar(x2, "X2")?;
    x1.grid().ensure_same(x2.grid(), "c_eps")?;
    let (m, n) = resolve(x1.grid(), eps, t)?;
    Ok(c_eps_m(x1, x2, m, n))
}

/// `C(eps, X1, X2)` at every node.
pub fn c_eps_sweep(x1: &GridPath, x2: &GridPath, eps: f64) -> Result<Vec<f64>> {
    require_scalar(x1, "X1")?;
    require_scalar(x2, "X2")?;
    x1.grid().ensure_same(x2.grid(), "c_eps")?;
    let m = x1.grid().eps_multiple(eps)?;
    Ok(reg_sweep(x1.grid().steps(), m, |a, b| inc(x1, 0, a, b) * inc(x2, 0, a, b)))
}

/// The same sum as [`c_eps`] with the absolute value of each product.
pub fn strong_sense_stat(x1: &GridPath, x2: &GridPath, eps: f64, t: f64) -> Result<f64> {
    require_scalar(x1, "X1")?;
    require_scalar(x2, "X2")?;
    x1.grid().ensure_same(x2.grid(), "strong_sense_stat")?;
    let (m, n) = resolve(x1.grid(), eps, t)?;
    Ok(reg_sum(n, m, |a, b| (inc(x1, 0, a, b) * inc(x2, 0, a, b)).abs()))
}

pub(crate) fn cubic_m(x: &GridPath, m: usize, n: usize) -> f64 {
    reg_sum(n, m, |a, b| inc(x, 0, a, b).abs().powi(3))
}

/// `(1/eps) int_0^t |X_{s+eps} - X_s|^3 ds`.
pub fn cubic_variation_stat(x: &GridPath, eps: f64, t: f64) -> Result<f64> {
    require_scalar(x, "X")?;
    let (m, n) = resolve(x.grid(), eps, t)?;
    Ok(cubic_m(x, m, n))
}

/// Which endpoint weights the integrand in a regularized matrix integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Weight {
    Left,
    Right,
    Mid,
}

pub(crate) fn matrix_integral_m(y: &GridPath, x: &GridPath, m: usize, n: usize, weight: Weight) -> Matrix {
    let (rows, cols) = (y.dim(), x.dim());
    let mut out = vec![0.0; rows * cols];
    let mut dx = vec![0.0; cols];
    reg_sum_into(n, m, &mut out, |a, b, acc| {
        let (xa, xb) = (x.row(a), x.row(b));
        for j in 0..cols {
            dx[j] = xb[j] - xa[j];
        }
        let (ya, yb) = (y.row(a), y.row(b));
        for i in 0..rows {
            let w = match weight {
                Weight::Left => ya[i],
                Weight::Right => yb[i],
                Weight::Mid => 0.5 * (ya[i] + yb[i]),
            };
            for j in 0..cols {
                acc[i * cols + j] += w * dx[j];
            }
        }
    });
    Matrix::from_vec(rows, cols, out)
}

fn matrix_integral(y: &GridPath, x: &GridPath, eps: f64, t: f64, weight: Weight) -> Result<Matrix> {
    y.grid().ensure_same(x.grid(), "integrand and integrator")?;
    let (m, n) = resolve(x.grid(), eps, t)?;
    Ok(matrix_integral_m(y, x, m, n, weight))
}

/// Forward integral approximation `(1/eps) int_0^t Y_s (X_{s+eps} - X_s)^T ds`, an `n x d` matrix.
pub fn forward_integral(y: &GridPath, x: &GridPath, eps: f64, t: f64) -> Result<Matrix> {
    matrix_integral(y, x, eps, t, Weight::Left)
}

/// Symmetric integral approximation with integrand weight `(Y_s + Y_{s+eps}) / 2`.
pub fn symmetric_integral(y: &GridPath, x: &GridPath, eps: f64, t: f64) -> Result<Matrix> {
    matrix_integral(y, x, eps, t, Weight::Mid)
}

/// Backward integral approximation with integrand weight `Y_{s+eps}`.
pub fn backward_integral(y: &GridPath, x: &GridPath, eps: f64, t: f64) -> Result<Matrix> {
    matrix_integral(y, x, eps, t, Weight::Right)
}

pub(crate) fn scalar_qv_m(x: &GridPath, m: usize, n: usize) -> f64 {
    reg_sum(n, m, |a, b| {
        let (xa, xb) = (x.row(a), x.row(b));
        xa.iter().zip(xb).map(|(p, q)| (q - p) * (q - p)).sum()
    })
}

/// Scalar quadratic variation approximation using the squared Euclidean norm of increments.
pub fn scalar_qv(x: &GridPath, eps: f64, t: f64) -> Result<f64> {
    let (m, n) = resolve(x.grid(), eps, t)?;
    Ok(scalar_qv_m(x, m, n))
}

/// Scalar quadratic variation approximation at every node.
pub fn scalar_qv_sweep(x: &GridPath, eps: f64) -> Result<Vec<f64>> {
    let m = x.grid().eps_multiple(eps)?;
    Ok(reg_sweep(x.grid().steps(), m, |a, b| {
        let (xa, xb) = (x.row(a), x.row(b));
        xa.iter().zip(xb).map(|(p, q)| (q - p) * (q - p)).sum()
    }))
}

pub(crate) fn weighted_cov_m(h: &GridPath, x1: &GridPath, x2: &GridPath, m: usize, n: usize) -> f64 {
    reg_sum(n, m, |a, b| h.scalar(a) * inc(x1, 0, a, b) * inc(x2, 0, a, b))
}

/// `(1/eps) int_0^t H_s (X1_{s+eps} - X1_s)(X2_{s+eps} - X2_s) ds`.
pub fn weighted_cov(h: &GridPath, x1: &GridPath, x2: &GridPath, eps: f64, t: f64) -> Result<f64> {
    require_scalar(h, "H")?;
    require_scalar(x1, "X1")?;
    require_scalar(x2, "X2")?;
    h.grid().ensure_same(x1.grid(), "weighted_cov")?;
    x1.grid().ensure_same(x2.grid(), "weighted_cov")?;
    let (m, n) = resolve(x1.grid(), eps, t)?;
    Ok(weighted_cov_m(h, x1, x2, m, n))
}

fn oracle(z: &MatrixPath, x: &GridPath, midpoint: bool) -> Result<GridPath> {
    z.grid().ensure_same(x.grid(), "oracle integrand and integrator")?;
    if z.cols() != x.dim() {
        return Err(Error::InvalidDimension(format!(
            "integrand has {} columns, integrator has dim {}",
            z.cols(),
            x.dim()
        )));
    }
    let (n_out, d) = (z.rows(), x.dim());
    let grid = *x.grid();
    let mut values = vec![0.0; grid.len() * n_out];
    let mut dx = vec![0.0; d];
    for k in 0..grid.steps() {
        let (xa, xb) = (x.row(k), x.row(k + 1));
        for j in 0..d {
            dx[j] = xb[j] - xa[j];
        }
        let (za, zb) = (z.at(k), z.at(k + 1));
        for i in 0..n_out {
            let mut s = 0.0;
            for j in 0..d {
                let w = if midpoint {
                    0.5 * (za[i * d + j] + zb[i * d + j])
                } else {
                    za[i * d + j]
                };
                s += w * dx[j];
            }
            values[(k + 1) * n_out + i] = values[k * n_out + i] + s;
        }
    }
    GridPath::new(grid, n_out, values)
}

/// Discrete Itô integral `sum_k Z_{t_k} (X_{t_{k+1}} - X_{t_k})` at every node.
pub fn ito_oracle(z: &MatrixPath, x: &GridPath) -> Result<GridPath> {
    oracle(z, x, false)
}

/// Discrete Stratonovich (trapezoid) integral at every node.
pub fn strat_oracle(z: &MatrixPath, x: &GridPath) -> Result<GridPath> {
    oracle(z, x, true)
}

/// `Y_k * I_d` as a matrix path: the integrand that turns a scalar `Y`
/// integrated against a `d`-dimensional `X` into a `d`-vector.
pub fn scalar_integrand(y: &GridPath, d: usize) -> Result<MatrixPath> {
    require_scalar(y, "Y")?;
    MatrixPath::from_fn(*y.grid(), d, d, |k, m| {
        for i in 0..d {
            m[i * d + i] = y.scalar(k);
        }
    })
}

/// Discrete bracket `sum_k (Y_{k+1} - Y_k)(X_{k+1} - X_k)^T` accumulated per node, as `n x d` matrices.
pub fn discrete_bracket(y: &GridPath, x: &GridPath) -> Result<MatrixPath> {
    y.grid().ensure_same(x.grid(), "discrete_bracket")?;
    let (n_out, d) = (y.dim(), x.dim());
    let grid = *x.grid();
    let sz = n_out * d;
    let mut data = vec![0.0; grid.len() * sz];
    for k in 0..grid.steps() {
        for i in 0..n_out {
            let dy = y.at(k + 1, i) - y.at(k, i);
            for j in 0..d {
                let dx = x.at(k + 1, j) - x.at(k, j);
                data[(k + 1) * sz + i * d + j] = data[k * sz + i * d + j] + dy * dx;
            }
        }
    }
    MatrixPath::new(grid, n_out, d, data)
}
