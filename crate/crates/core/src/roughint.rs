//! Rough stochastic integrals by regularization, the increment operators and
//! a dyadic sewing integrator.
//!
//! The germ of a controlled pair against an enhanced path is
//!
//! ```text
//! A_{s,t} = Y_s (X_t - X_s)^T + Y'_s XX_{s,t}
//! ```
//!
//! and the forward rough integral is `(1/eps) int_0^t A_{s,s+eps} ds`. The
//! backward variant expands around the right endpoint, which pairs `Y'_t` with
//! the right-anchored area `int_s^t (X_r - X_t) ⊗ dX_r = XX_{s,t} - ΔX ΔX^T`.

use crate::controlled::ControlledPair;
use crate::enhance::{EnhancedPath, SecondOrder};
use crate::error::{Error, Result};
use crate::linalg::{add_row_times_matrix, max_abs, Matrix};
use crate::path::{dyadic_lags, fmt_f64, GridPath, MatrixPath};
use crate::regcalc::{reg_sum_into, resolve, EpsSchedule};

/// First increment `(δ₁f)_{j,k} = f_k - f_j` of a path.
#[derive(Debug, Clone, Copy)]
pub struct Delta1<'a>(&'a GridPath);

/// `δ₁f` as a two-parameter accessor.
pub fn delta1(f: &GridPath) -> Delta1<'_> {
    Delta1(f)
}

impl Delta1<'_> {
    /// Scalar increment of component 0.
    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.0.at(k, 0) - self.0.at(j, 0)
    }

    pub fn row(&self, j: usize, k: usize) -> Vec<f64> {
        self.0.row(k).iter().zip(self.0.row(j)).map(|(a, b)| a - b).collect()
    }
}

/// `(δ₂g)_{j,m,k} = -g_{m,k} + g_{j,k} - g_{j,m}`.
pub fn delta2(g: impl Fn(usize, usize) -> f64, j: usize, m: usize, k: usize) -> f64 {
    -g(m, k) + g(j, k) - g(j, m)
}

/// The germ of a controlled pair over a second-order process.
pub struct Germ<'a, S: SecondOrder + ?Sized = EnhancedPath> {
    pair: &'a ControlledPair,
    enh: &'a S,
}

impl<'a, S: SecondOrder + ?Sized> Germ<'a, S> {
    pub fn new(pair: &'a ControlledPair, enh: &'a S) -> Result<Self> {
        if pair.x() != enh.base() {
            if pair.x().grid() != enh.base().grid() {
                return Err(Error::GridMismatch("pair and enhancement grids differ".into()));
            }
            return Err(Error::InvalidParameter("pair reference path differs from the enhanced path".into()));
        }
        Ok(Self { pair, enh })
    }

    pub fn rows(&self) -> usize {
        self.pair.y().dim()
    }

    pub fn cols(&self) -> usize {
        self.pair.x().dim()
    }

    /// `A_{j,k}` into `out` (`n x d`); `scratch` needs `d * d` slots.
    #[inline]
    pub fn eval_into(&self, j: usize, k: usize, out: &mut [f64], scratch: &mut [f64]) {
        out.fill(0.0);
        self.accumulate(j, k, j, 1.0, false, out, scratch);
    }

    pub fn eval(&self, j: usize, k: usize) -> Matrix {
        let (n, d) = (self.rows(), self.cols());
        let mut out = Matrix::zeros(n, d);
        let mut scratch = vec![0.0; d * d];
        self.eval_into(j, k, &mut out.data, &mut scratch);
        out
    }

    /// Adds `scale * (Y_a ΔX^T + Y'_a Q)` to `out`, where `ΔX = X_k - X_j` and
    /// `Q = XX_{j,k}`, or the right-anchored `XX_{j,k} - ΔX ΔX^T` when `right_area`.
    #[allow(clippy::too_many_arguments)]
    #[inline]
    fn accumulate(&self, j: usize, k: usize, a: usize, scale: f64, right_area: bool, out: &mut [f64], scratch: &mut [f64]) {
        let x = self.pair.x();
        let d = x.dim();
        let (xj, xk) = (x.row(j), x.row(k));
        let ya = self.pair.y().row(a);
        let yp = self.pair.yprime().at(a);
        for (i, yi) in ya.iter().enumerate() {
            let c = scale * yi;
            for col in 0..d {
                out[i * d + col] += c * (xk[col] - xj[col]);
            }
        }
        if yp.iter().all(|v| *v == 0.0) {
            return;
        }
        self.enh.block_into(j, k, scratch);
        if right_area {
            for r in 0..d {
                for col in 0..d {
                    scratch[r * d + col] -= (xk[r] - xj[r]) * (xk[col] - xj[col]);
                }
            }
        }
        for i in 0..ya.len() {
            add_row_times_matrix(&mut out[i * d..(i + 1) * d], &yp[i * d..(i + 1) * d], scratch, scale);
        }
    }

    /// `δ₂A_{j,m,k}` (`n x d`).
    pub fn delta2(&self, j: usize, m: usize, k: usize) -> Matrix {
        let (n, d) = (self.rows(), self.cols());
        let mut out = Matrix::zeros(n, d);
        let mut scratch = vec![0.0; d * d];
        self.accumulate(m, k, m, -1.0, false, &mut out.data, &mut scratch);
        self.accumulate(j, k, j, 1.0, false, &mut out.data, &mut scratch);
        self.accumulate(j, m, j, -1.0, false, &mut out.data, &mut scratch);
        out
    }

    /// The two summands `R_{j,m} (X_k - X_m)^T` and `(Y'_m - Y'_j) XX_{m,k}`.
    ///
    /// By Chen's relation `δ₂A_{j,m,k}` equals minus their sum.
    pub fn delta2_terms(&self, j: usize, m: usize, k: usize) -> (Matrix, Matrix) {
        let (n, d) = (self.rows(), self.cols());
        let x = self.pair.x();
        let mut r = vec![0.0; n];
        self.pair.remainder_into(j, m, &mut r);
        let dx: Vec<f64> = x.row(k).iter().zip(x.row(m)).map(|(a, b)| a - b).collect();
        let rem = Matrix::outer(&r, &dx);
        let block = self.enh.block(m, k);
        let (ypj, ypm) = (self.pair.yprime().at(j), self.pair.yprime().at(m));
        let diff: Vec<f64> = ypm.iter().zip(ypj).map(|(a, b)| a - b).collect();
        let mut der = Matrix::zeros(n, d);
        for i in 0..n {
            add_row_times_matrix(&mut der.data[i * d..(i + 1) * d], &diff[i * d..(i + 1) * d], &block.data, 1.0);
        }
        (rem, der)
    }
}

fn check_pair<S: SecondOrder + ?Sized>(p: &ControlledPair, e: &S) -> Result<()> {
    p.x().grid().ensure_same(e.base().grid(), "pair and enhancement")
}

pub(crate) fn rough_reg_m<S: SecondOrder + ?Sized>(germ: &Germ<'_, S>, m: usize, n: usize) -> Matrix {
    let (rows, d) = (germ.rows(), germ.cols());
    let mut out = vec![0.0; rows * d];
    let mut scratch = vec![0.0; d * d];
    reg_sum_into(n, m, &mut out, |a, b, acc| germ.accumulate(a, b, a, 1.0, false, acc, &mut scratch));
    Matrix::from_vec(rows, d, out)
}

/// Which endpoint the backward germ expands around and which area it uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Backward {
    RightArea,
    LeftArea,
}

fn backward_m<S: SecondOrder + ?Sized>(germ: &Germ<'_, S>, m: usize, n: usize, kind: Backward) -> Matrix {
    let (rows, d) = (germ.rows(), germ.cols());
    let mut out = vec![0.0; rows * d];
    let mut scratch = vec![0.0; d * d];
    reg_sum_into(n, m, &mut out, |a, b, acc| {
        germ.accumulate(a, b, b, 1.0, kind == Backward::RightArea, acc, &mut scratch)
    });
    Matrix::from_vec(rows, d, out)
}

/// `(1/eps) int_0^t (Y_s X_{s,s+eps}^T + Y'_s XX_{s,s+eps}) ds`.
pub fn rough_integral_reg<S: SecondOrder + ?Sized>(p: &ControlledPair, e: &S, eps: f64, t: f64) -> Result<Matrix> {
    check_pair(p, e)?;
    let germ = Germ::new(p, e)?;
    let (m, n) = resolve(p.x().grid(), eps, t)?;
    Ok(rough_reg_m(&germ, m, n))
}

/// Forward rough integral at every node, from one prefix-sum pass.
pub fn rough_integral_sweep<S: SecondOrder + ?Sized>(p: &ControlledPair, e: &S, eps: f64) -> Result<MatrixPath> {
    check_pair(p, e)?;
    let germ = Germ::new(p, e)?;
    let grid = *p.x().grid();
    let m = grid.eps_multiple(eps)?;
    let (rows, d) = (germ.rows(), germ.cols());
    let sz = rows * d;
    let mut data = vec![0.0; grid.len() * sz];
    let mut scratch = vec![0.0; d * d];
    let mut acc = vec![0.0; sz];
    let inv = 1.0 / m as f64;
    for k in 0..grid.steps() {
        germ.accumulate(k, k + m, k, 1.0, false, &mut acc, &mut scratch);
        for (o, a) in data[(k + 1) * sz..(k + 2) * sz].iter_mut().zip(&acc) {
            *o = a * inv;
        }
    }
    MatrixPath::new(grid, rows, d, data)
}

/// Backward rough integral
/// `(1/eps) int_0^t (Y_{s+eps} X_{s,s+eps}^T + Y'_{s+eps} (XX_{s,s+eps} - X_{s,s+eps} X_{s,s+eps}^T)) ds`.
///
/// This is the right-endpoint expansion of the germ. It shares its limit with
/// [`rough_integral_reg`] and satisfies the discrete time-reversal identity
/// checked by [`time_reversal_check`].
pub fn rough_integral_backward<S: SecondOrder + ?Sized>(p: &ControlledPair, e: &S, eps: f64, t: f64) -> Result<Matrix> {
    check_pair(p, e)?;
    let germ = Germ::new(p, e)?;
    let (m, n) = resolve(p.x().grid(), eps, t)?;
    Ok(backward_m(&germ, m, n, Backward::RightArea))
}

/// Backward sum with `Y'_{s+eps}` paired with the left-anchored `XX_{s,s+eps}`.
///
/// It exceeds [`rough_integral_backward`] by exactly
/// `(1/eps) int_0^t Y'_{s+eps} X_{s,s+eps} X_{s,s+eps}^T ds`, which does not
/// vanish as `eps -> 0` when `X` has nonzero quadratic variation.
pub fn rough_integral_backward_left_area<S: SecondOrder + ?Sized>(
    p: &ControlledPair,
    e: &S,
    eps: f64,
    t: f64,
) -> Result<Matrix> {
    check_pair(p, e)?;
    let germ = Germ::new(p, e)?;
    let (m, n) = resolve(p.x().grid(), eps, t)?;
    Ok(backward_m(&germ, m, n, Backward::LeftArea))
}

/// One width of a [`TimeReversalReport`].
#[derive(Debug, Clone, PartialEq)]
pub struct TimeReversalLevel {
    pub eps: f64,
    /// Backward rough integral over `[0, t]`.
    pub backward: Matrix,
    /// Minus the forward rough integral of the reversed pair over `[T - t, T]`.
    pub reversed: Matrix,
    pub discrepancy: f64,
    /// Same comparison with the reversed integral taken over the shifted
    /// window `[T - t - eps, T - eps]`, when that window lies inside `[0, T]`.
    pub shifted_discrepancy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeReversalReport {
    pub levels: Vec<TimeReversalLevel>,
}

impl TimeReversalReport {
    pub fn max_discrepancy(&self) -> f64 {
        self.levels.iter().fold(0.0, |m, l| m.max(l.discrepancy))
    }

    pub fn finest(&self) -> &TimeReversalLevel {
        self.levels.last().expect("non-empty schedule")
    }
}

/// Compares the backward rough integral on `[0, t]` with minus the forward
/// rough integral of the reversed pair on `[T - t, T]`, at every width of the
/// schedule. The reversed enhancement is rebuilt from the reversed path in the
/// same flavor.
pub fn time_reversal_check(p: &ControlledPair, e: &EnhancedPath, schedule: &EpsSchedule, t: f64) -> Result<TimeReversalReport> {
    check_pair(p, e)?;
    let grid = *p.x().grid();
    let n = grid.node_index(t)?;
    let big_n = grid.steps();
    let rp = p.reversed();
    let re = e.reversed()?;
    let germ = Germ::new(p, e)?;
    let rgerm = Germ::new(&rp, &re)?;
    let (rows, d) = (germ.rows(), germ.cols());
    let mut scratch = vec![0.0; d * d];
    let mut window = |from: usize, to: usize, m: usize| {
        let mut acc = vec![0.0; rows * d];
        for r in from..to {
            rgerm.accumulate(r, r + m, r, 1.0, false, &mut acc, &mut scratch);
        }
        Matrix::from_vec(rows, d, acc).scale(-1.0 / m as f64)
    };
    let mut levels = Vec::with_capacity(schedule.len());
    for (&m, eps) in schedule.multiples().iter().zip(schedule.eps()) {
        let backward = backward_m(&germ, m, n, Backward::RightArea);
        let reversed = window(big_n - n, big_n, m);
        let discrepancy = backward.sub(&reversed).max_norm();
        let shifted_discrepancy = (n + m <= big_n).then(|| {
            let shifted = window(big_n - n - m, big_n - m, m);
            backward.sub(&shifted).max_norm()
        });
        levels.push(TimeReversalLevel {
            eps,
            backward,
            reversed,
            discrepancy,
            shifted_discrepancy,
        });
    }
    Ok(TimeReversalReport { levels })
}

/// Outcome of [`sewing_integral`].
#[derive(Debug, Clone, PartialEq)]
pub struct SewingResult {
    /// Value per requested node at the finest level reached.
    pub values: Vec<Matrix>,
    /// Finest dyadic level used (block size `2^(L_max - level)` grid steps).
    pub level: usize,
    /// Refinement delta per level, starting at level 1.
    pub deltas: Vec<f64>,
    /// Delta of the last refinement.
    pub delta: f64,
    /// False when the tolerance was not met before the grid resolution or `max_level`.
    pub converged: bool,
}

impl SewingResult {
    /// `level,t,component,value,delta`, one row per requested node and component.
    pub fn write_csv<W: std::io::Write>(&self, ts: &[f64], writer: W) -> Result<()> {
        if ts.len() != self.values.len() {
            return Err(Error::InvalidDimension(format!("{} times for {} values", ts.len(), self.values.len())));
        }
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["level", "t", "component", "value", "delta"])?;
        for (t, v) in ts.iter().zip(&self.values) {
            for (c, x) in v.data.iter().enumerate() {
                w.write_record([self.level.to_string(), fmt_f64(*t), c.to_string(), fmt_f64(*x), fmt_f64(self.delta)])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// `eps,t,component,value` for rough-integral values; components are row-major.
pub fn write_rough_csv<W: std::io::Write>(entries: &[(f64, f64, Matrix)], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["eps", "t", "component", "value"])?;
    for (eps, t, v) in entries {
        for (c, x) in v.data.iter().enumerate() {
            w.write_record([fmt_f64(*eps), fmt_f64(*t), c.to_string(), fmt_f64(*x)])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Sum of the germ over the dyadic partition of `[0, t_n]` with blocks of
/// `block` steps and a ragged final segment, for every requested node.
fn dyadic_sums<S: SecondOrder + ?Sized>(germ: &Germ<'_, S>, nodes: &[usize], block: usize) -> Vec<Vec<f64>> {
    let (rows, d) = (germ.rows(), germ.cols());
    let sz = rows * d;
    let top = nodes.iter().copied().max().unwrap_or(0);
    let full = top / block;
    let mut scratch = vec![0.0; d * d];
    // prefix[b] = sum of the first b full blocks
    let mut prefix = vec![vec![0.0; sz]];
    let mut acc = vec![0.0; sz];
    for b in 0..full {
        germ.accumulate(b * block, (b + 1) * block, b * block, 1.0, false, &mut acc, &mut scratch);
        prefix.push(acc.clone());
    }
    nodes
        .iter()
        .map(|&n| {
            let b = n / block;
            let mut v = prefix[b].clone();
            if b * block < n {
                germ.accumulate(b * block, n, b * block, 1.0, false, &mut v, &mut scratch);
            }
            v
        })
        .collect()
}

/// Dyadic sewing of the germ on `[0, t]` for every `t` in `ts`.
///
/// Level `L` partitions `[0, T]` into blocks of `2^(L_max - L)` grid steps,
/// where `2^L_max` is the largest power of two not exceeding `N`. Refinement
/// stops once the max-norm change drops below `tol`, or at the grid
/// resolution, or at `max_level`.
pub fn sewing_integral<S: SecondOrder + ?Sized>(
    p: &ControlledPair,
    e: &S,
    ts: &[f64],
    tol: f64,
    max_level: usize,
) -> Result<SewingResult> {
    check_pair(p, e)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("sewing tolerance must be positive, got {tol}")));
    }
    if ts.is_empty() {
        return Err(Error::InvalidParameter("no nodes requested".into()));
    }
    let grid = *p.x().grid();
    let nodes = ts.iter().map(|&t| grid.node_index(t)).collect::<Result<Vec<_>>>()?;
    let germ = Germ::new(p, e)?;
    let l_max = usize::BITS as usize - 1 - grid.steps().leading_zeros() as usize;
    let last = l_max.min(max_level);
    let mut prev = dyadic_sums(&germ, &nodes, 1 << l_max);
    let mut deltas = Vec::new();
    let mut level = 0;
    let mut converged = false;
    while level < last {
        level += 1;
        let cur = dyadic_sums(&germ, &nodes, 1 << (l_max - level));
        let delta = cur
            .iter()
            .zip(&prev)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max);
        deltas.push(delta);
        prev = cur;
        if delta < tol {
            converged = true;
            break;
        }
    }
    let (rows, d) = (germ.rows(), germ.cols());
    Ok(SewingResult {
        values: prev.into_iter().map(|v| Matrix::from_vec(rows, d, v)).collect(),
        level,
        delta: deltas.last().copied().unwrap_or(0.0),
        deltas,
        converged,
    })
}

/// Which part of `δ₂A` a norm is taken over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GermPart {
    Full,
    /// `R_{j,m} (X_k - X_m)^T`.
    Remainder,
    /// `(Y'_m - Y'_j) XX_{m,k}`.
    Derivative,
}

/// `max |δ₂A_{j,m,k}| / (|t_m - t_j|^rho |t_k - t_j|^beta)` over sampled triples `j < m < k`.
///
/// All triples are visited when there are at most `triple_budget` of them;
/// otherwise both the outer span `k - j` and the inner span `m - j` run over
/// dyadic lags, across every start `j`.
pub fn delta2_germ_norm<S: SecondOrder + ?Sized>(
    p: &ControlledPair,
    e: &S,
    rho: f64,
    beta: f64,
    triple_budget: usize,
) -> Result<f64> {
    delta2_part_norm(p, e, GermPart::Full, rho, beta, triple_budget)
}

/// [`delta2_germ_norm`] restricted to one summand of `δ₂A`.
pub fn delta2_part_norm<S: SecondOrder + ?Sized>(
    p: &ControlledPair,
    e: &S,
    part: GermPart,
    rho: f64,
    beta: f64,
    triple_budget: usize,
) -> Result<f64> {
    check_pair(p, e)?;
    if !(rho >= 0.0 && beta >= 0.0) {
        return Err(Error::InvalidParameter(format!("exponents must be non-negative, got ({rho}, {beta})")));
    }
    let germ = Germ::new(p, e)?;
    let grid = *p.x().grid();
    let n = grid.steps();
    let h = grid.step();
    let mut best = 0.0_f64;
    let mut visit = |j: usize, m: usize, k: usize| {
        let v = match part {
            GermPart::Full => germ.delta2(j, m, k).max_norm(),
            GermPart::Remainder => germ.delta2_terms(j, m, k).0.max_norm(),
            GermPart::Derivative => germ.delta2_terms(j, m, k).1.max_norm(),
        };
        if v > 0.0 {
            let denom = ((m - j) as f64 * h).powf(rho) * ((k - j) as f64 * h).powf(beta);
            best = best.max(v / denom);
        }
    };
    let total = (n + 1) * n * n.saturating_sub(1) / 6;
    if total <= triple_budget {
        for j in 0..=n {
            for m in (j + 1)..=n {
                for k in (m + 1)..=n {
                    visit(j, m, k);
                }
            }
        }
    } else {
        let lags = dyadic_lags(n);
        for &outer in &lags {
            for &inner in lags.iter().filter(|&&l| l < outer) {
                for j in 0..=(n - outer) {
                    visit(j, j + inner, j + outer);
                }
            }
        }
    }
    Ok(best)
}

/// Largest absolute entry of a matrix list.
pub fn max_norm_all(ms: &[Matrix]) -> f64 {
    ms.iter().fold(0.0, |m, x| m.max(max_abs(&x.data)))
}
