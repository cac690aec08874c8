//! Second-order processes.
//!
//! An [`EnhancedPath`] keeps the one-parameter iterated integral
//! `I_t = int_0^t X ⊗ dX` and reconstructs the two-parameter field on demand:
//!
//! ```text
//! XX_{s,t} = I_t - I_s - X_s ⊗ (X_t - X_s),   s <= t,
//! XX_{s,t} = XX_{t,s},                         s >  t.
//! ```
//!
//! Chen's relation holds for this reconstruction identically, whatever `I` is.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{max_abs, Matrix};
use crate::path::{dyadic_lags, fmt_f64, parse_f64, Grid, GridPath, MatrixPath};

/// Discrete accumulation rule for `I`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flavor {
    /// Left-point sums.
    Ito,
    /// Trapezoid sums.
    Strat,
}

impl std::fmt::Display for Flavor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Flavor::Ito => "ito",
            Flavor::Strat => "strat",
        })
    }
}

impl std::str::FromStr for Flavor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ito" => Ok(Flavor::Ito),
            "strat" | "stratonovich" => Ok(Flavor::Strat),
            other => Err(Error::InvalidParameter(format!("unknown flavor {other:?}"))),
        }
    }
}

/// Anything that can hand out second-order blocks over a base path.
pub trait SecondOrder {
    fn base(&self) -> &GridPath;

    /// Writes `XX_{t_j, t_k}` (row-major `d x d`) into `out`. Indices past `N` clamp.
    fn block_into(&self, j: usize, k: usize, out: &mut [f64]);

    fn dim(&self) -> usize {
        self.base().dim()
    }

    fn block(&self, j: usize, k: usize) -> Matrix {
        let d = self.dim();
        let mut m = Matrix::zeros(d, d);
        self.block_into(j, k, &mut m.data);
        m
    }
}

/// A path together with its discrete iterated integral.
#[derive(Debug, Clone, PartialEq)]
pub struct EnhancedPath {
    base: GridPath,
    flavor: Flavor,
    iterated: MatrixPath,
}

/// Builds the enhancement of `x` by node recursion.
pub fn enhance(x: &GridPath, flavor: Flavor) -> Result<EnhancedPath> {
    let grid = *x.grid();
    let d = x.dim();
    let sz = d * d;
    let mut data = vec![0.0; grid.len() * sz];
    for k in 0..grid.steps() {
        let (xa, xb) = (x.row(k), x.row(k + 1));
        for i in 0..d {
            let w = match flavor {
                Flavor::Ito => xa[i],
                Flavor::Strat => 0.5 * (xa[i] + xb[i]),
            };
            for j in 0..d {
                data[(k + 1) * sz + i * d + j] = data[k * sz + i * d + j] + w * (xb[j] - xa[j]);
            }
        }
    }
    let iterated = MatrixPath::new(grid, d, d, data)?;
    Ok(EnhancedPath {
        base: x.clone(),
        flavor,
        iterated,
    })
}

impl EnhancedPath {
    /// Assembles an enhancement from a precomputed iterated integral.
    pub fn from_parts(base: GridPath, flavor: Flavor, iterated: MatrixPath) -> Result<Self> {
        base.grid().ensure_same(iterated.grid(), "enhanced path")?;
        let d = base.dim();
        if iterated.rows() != d || iterated.cols() != d {
            return Err(Error::InvalidDimension(format!(
                "iterated integral is {}x{}, expected {d}x{d}",
                iterated.rows(),
                iterated.cols()
            )));
        }
        Ok(Self { base, flavor, iterated })
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn grid(&self) -> &Grid {
        self.base.grid()
    }

    pub fn iterated(&self) -> &MatrixPath {
        &self.iterated
    }

    /// Enhancement of the time-reversed base path, rebuilt in the same flavor.
    pub fn reversed(&self) -> Result<EnhancedPath> {
        enhance(&self.base.reversed(), self.flavor)
    }

    /// Writes the iterated integral as `t,i_1_1,i_1_2,...` rows.
    pub fn write_iterated_csv<W: Write>(&self, writer: W) -> Result<()> {
        let d = self.dim();
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["t".to_string()];
        for r in 1..=d {
            for c in 1..=d {
                header.push(format!("i_{r}_{c}"));
            }
        }
        w.write_record(&header)?;
        for k in 0..self.grid().len() {
            let mut rec = vec![fmt_f64(self.grid().node(k))];
            rec.extend(self.iterated.at(k).iter().map(|v| fmt_f64(*v)));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads an iterated-integral CSV for `base`.
    pub fn read_iterated_csv<R: Read>(base: GridPath, flavor: Flavor, reader: R) -> Result<Self> {
        let d = base.dim();
        let mut r = csv::Reader::from_reader(reader);
        if r.headers()?.len() != d * d + 1 {
            return Err(Error::Malformed(format!("iterated CSV must have {} columns", d * d + 1)));
        }
        let mut data = Vec::with_capacity(base.grid().len() * d * d);
        for rec in r.records() {
            let rec = rec?;
            for field in rec.iter().skip(1) {
                data.push(parse_f64(field)?);
            }
        }
        let iterated = MatrixPath::new(*base.grid(), d, d, data)?;
        Self::from_parts(base, flavor, iterated)
    }
}

impl SecondOrder for EnhancedPath {
    fn base(&self) -> &GridPath {
        &self.base
    }

    #[inline]
    fn block_into(&self, j: usize, k: usize, out: &mut [f64]) {
        let (s, t) = if j <= k { (j, k) } else { (k, j) };
        let d = self.base.dim();
        if s.min(self.grid().steps()) == t.min(self.grid().steps()) {
            out.fill(0.0);
            return;
        }
        let (is, it) = (self.iterated.at(s), self.iterated.at(t));
        let (xs, xt) = (self.base.row(s), self.base.row(t));
        for a in 0..d {
            for b in 0..d {
                let idx = a * d + b;
                out[idx] = it[idx] - is[idx] - xs[a] * (xt[b] - xs[b]);
            }
        }
    }
}

/// `XX_{t_j, t_k}`; `j > k` uses the symmetric extension.
pub fn xx_block<S: SecondOrder + ?Sized>(e: &S, j: usize, k: usize) -> Matrix {
    e.block(j, k)
}

/// Max-norm of `-XX_{m,k} + XX_{j,k} - XX_{j,m} - (X_m - X_j)(X_k - X_m)^T`.
pub fn chen_residual<S: SecondOrder + ?Sized>(e: &S, j: usize, m: usize, k: usize) -> Result<f64> {
    if !(j <= m && m <= k) {
        return Err(Error::InvalidParameter(format!("chen_residual needs j <= m <= k, got ({j}, {m}, {k})")));
    }
    let x = e.base();
    let d = x.dim();
    let (mk, jk, jm) = (e.block(m, k), e.block(j, k), e.block(j, m));
    let (xj, xm, xk) = (x.row(j), x.row(m), x.row(k));
    let mut worst = 0.0_f64;
    for a in 0..d {
        for b in 0..d {
            let idx = a * d + b;
            let lhs = -mk.data[idx] + jk.data[idx] - jm.data[idx];
            let rhs = (xm[a] - xj[a]) * (xk[b] - xm[b]);
            worst = worst.max((lhs - rhs).abs());
        }
    }
    Ok(worst)
}

/// Symmetric and antisymmetric parts of a square block.
pub fn sym_anti(block: &Matrix) -> (Matrix, Matrix) {
    let t = block.transpose();
    (block.add(&t).scale(0.5), block.sub(&t).scale(0.5))
}

/// Max-norm of `sym(XX_{j,k}) - (X_k - X_j)(X_k - X_j)^T / 2`.
pub fn geometric_defect<S: SecondOrder + ?Sized>(e: &S, j: usize, k: usize) -> f64 {
    let x = e.base();
    let (s, t) = (j.min(k), j.max(k));
    let dx: Vec<f64> = x.row(t).iter().zip(x.row(s)).map(|(a, b)| a - b).collect();
    let (sym, _) = sym_anti(&e.block(s, t));
    let half = Matrix::outer(&dx, &dx).scale(0.5);
    sym.sub(&half).max_norm()
}

/// Two-parameter Hölder norm `max ||XX_{j,k}|| / |t_k - t_j|^beta` over grid
/// pairs, with the same exhaustive-or-dyadic sampling as `holder_seminorm`.
pub fn holder2_norm<S: SecondOrder + ?Sized>(e: &S, beta: f64, pair_budget: usize) -> Result<f64> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidParameter(format!("exponent must be positive, got {beta}")));
    }
    let grid = *e.base().grid();
    let n = grid.steps();
    let d = e.dim();
    let mut buf = vec![0.0; d * d];
    let mut best = 0.0_f64;
    let mut scan = |lag: usize| {
        let denom = (lag as f64 * grid.step()).powf(beta);
        for j in 0..=(n - lag) {
            e.block_into(j, j + lag, &mut buf);
            let v = max_abs(&buf);
            if v > 0.0 {
                best = best.max(v / denom);
            }
        }
    };
    if (n + 1).saturating_mul(n + 1) <= pair_budget {
        (1..=n).for_each(&mut scan);
    } else {
        dyadic_lags(n).into_iter().for_each(&mut scan);
    }
    Ok(best)
}

/// Writes `j,k,row,col,value` for the requested blocks.
pub fn write_blocks_csv<S: SecondOrder + ?Sized, W: Write>(e: &S, pairs: &[(usize, usize)], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["j", "k", "row", "col", "value"])?;
    let d = e.dim();
    for &(j, k) in pairs {
        let b = e.block(j, k);
        for r in 0..d {
            for c in 0..d {
                w.write_record([j.to_string(), k.to_string(), r.to_string(), c.to_string(), fmt_f64(b.get(r, c))])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
