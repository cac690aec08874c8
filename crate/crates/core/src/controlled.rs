//! Stochastically controlled pairs `(Y, Y')` over a reference path `X`.
//!
//! `Y` is `n`-dimensional, `Y'` holds one `n x d` matrix per node and the
//! remainder is defined by
//!
//! ```text
//! Y_t - Y_s = Y'_s (X_t - X_s) + R_{s,t}.
//! ```
//!
//! `Y'` is read at left endpoints.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::path::{GridPath, MatrixPath};
use crate::regcalc::{c_eps_m, discrete_bracket, ito_oracle, resolve};

/// How a pair was constructed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairLabel {
    Zero,
    Gradient,
    Integrand,
    Custom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlledPair {
    y: GridPath,
    yprime: MatrixPath,
    x: GridPath,
    label: PairLabel,
}

/// Relative tolerance of the finite-difference gradient check in [`pair_gradient`].
pub const GRADIENT_CHECK_TOL: f64 = 1e-4;
const GRADIENT_CHECK_NODES: usize = 16;

impl ControlledPair {
    pub fn new(y: GridPath, yprime: MatrixPath, x: GridPath, label: PairLabel) -> Result<Self> {
        y.grid().ensure_same(x.grid(), "Y and X")?;
        yprime.grid().ensure_same(x.grid(), "Y' and X")?;
        if yprime.rows() != y.dim() || yprime.cols() != x.dim() {
            return Err(Error::InvalidDimension(format!(
                "Y' is {}x{}, expected {}x{}",
                yprime.rows(),
                yprime.cols(),
                y.dim(),
                x.dim()
            )));
        }
        Ok(Self { y, yprime, x, label })
    }

    pub fn y(&self) -> &GridPath {
        &self.y
    }

    pub fn yprime(&self) -> &MatrixPath {
        &self.yprime
    }

    pub fn x(&self) -> &GridPath {
        &self.x
    }

    pub fn label(&self) -> PairLabel {
        self.label
    }

    /// Same `Y` and `X` with a different derivative.
    pub fn with_yprime(&self, yprime: MatrixPath) -> Result<Self> {
        Self::new(self.y.clone(), yprime, self.x.clone(), PairLabel::Custom)
    }

    /// Componentwise sum of two pairs over the same reference path.
    pub fn sum(&self, other: &ControlledPair) -> Result<Self> {
        if self.x != other.x {
            return Err(Error::GridMismatch("pairs refer to different X".into()));
        }
        if self.y.dim() != other.y.dim() {
            return Err(Error::InvalidDimension("pairs have different Y dimension".into()));
        }
        let y: Vec<f64> = self.y.values().iter().zip(other.y.values()).map(|(a, b)| a + b).collect();
        let yp: Vec<f64> = self.yprime.data().iter().zip(other.yprime.data()).map(|(a, b)| a + b).collect();
        let grid = *self.x.grid();
        Self::new(
            GridPath::new(grid, self.y.dim(), y)?,
            MatrixPath::new(grid, self.yprime.rows(), self.yprime.cols(), yp)?,
            self.x.clone(),
            PairLabel::Custom,
        )
    }

    /// Time reversal of all three components: `Y_{N-k}`, `Y'_{N-k}`, `X_{N-k}`.
    pub fn reversed(&self) -> Self {
        Self {
            y: self.y.reversed(),
            yprime: self.yprime.reversed(),
            x: self.x.reversed(),
            label: self.label,
        }
    }

    /// `R_{j,k}` written into `out` (length `n`).
    #[inline]
    pub fn remainder_into(&self, j: usize, k: usize, out: &mut [f64]) {
        let d = self.x.dim();
        let (xj, xk) = (self.x.row(j), self.x.row(k));
        let (yj, yk) = (self.y.row(j), self.y.row(k));
        let yp = self.yprime.at(j);
        for (i, o) in out.iter_mut().enumerate() {
            let lin: f64 = (0..d).map(|c| yp[i * d + c] * (xk[c] - xj[c])).sum();
            *o = (yk[i] - yj[i]) - lin;
        }
    }

    /// Writes the three aligned CSV files and a JSON manifest under `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        self.y.write_csv(fs::File::create(dir.join("y.csv"))?)?;
        self.yprime.to_flat().write_csv(fs::File::create(dir.join("yprime.csv"))?)?;
        self.x.write_csv(fs::File::create(dir.join("x.csv"))?)?;
        let manifest = PairManifest {
            label: self.label,
            y_dim: self.y.dim(),
            x_dim: self.x.dim(),
            horizon: self.x.grid().horizon(),
            steps: self.x.grid().steps(),
        };
        fs::write(dir.join("pair.json"), serde_json::to_string_pretty(&manifest)?)?;
        Ok(())
    }

    pub fn read_dir(dir: &Path) -> Result<Self> {
        let open = |name: &str| {
            let p = dir.join(name);
            fs::File::open(&p).map_err(|e| match e.kind() {
                std::io::ErrorKind::NotFound => Error::NotFound(p.clone()),
                _ => Error::Io(e),
            })
        };
        let manifest: PairManifest = serde_json::from_reader(open("pair.json")?)?;
        let y = GridPath::read_csv(open("y.csv")?)?;
        let yp = GridPath::read_csv(open("yprime.csv")?)?;
        let x = GridPath::read_csv(open("x.csv")?)?;
        if x.grid().steps() != manifest.steps || y.dim() != manifest.y_dim || x.dim() != manifest.x_dim {
            return Err(Error::Malformed("pair files disagree with pair.json".into()));
        }
        let yprime = MatrixPath::from_flat(&yp, manifest.y_dim, manifest.x_dim)?;
        Self::new(y, yprime, x, manifest.label)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct PairManifest {
    label: PairLabel,
    y_dim: usize,
    x_dim: usize,
    horizon: f64,
    steps: usize,
}

/// `R_{j,k} = (Y_k - Y_j) - Y'_j (X_k - X_j)`.
pub fn remainder(p: &ControlledPair, j: usize, k: usize) -> Result<Vec<f64>> {
    if j > k {
        return Err(Error::InvalidParameter(format!("remainder needs j <= k, got ({j}, {k})")));
    }
    let mut out = vec![0.0; p.y.dim()];
    p.remainder_into(j, k, &mut out);
    Ok(out)
}

pub(crate) fn orthogonality_m(p: &ControlledPair, m: usize, n: usize) -> f64 {
    let (ny, d) = (p.y.dim(), p.x.dim());
    let mut acc = vec![0.0; ny * d];
    let mut r = vec![0.0; ny];
    for k in 0..n {
        p.remainder_into(k, k + m, &mut r);
        let (xa, xb) = (p.x.row(k), p.x.row(k + m));
        for i in 0..ny {
            for c in 0..d {
                acc[i * d + c] += r[i] * (xb[c] - xa[c]);
            }
        }
    }
    acc.iter().fold(0.0_f64, |w, v| w.max(v.abs())) / m as f64
}

/// `| (1/eps) int_0^t R_{s,s+eps} (X_{s+eps} - X_s) ds |`, maximized over rows and components.
pub fn orthogonality_stat(p: &ControlledPair, eps: f64, t: f64) -> Result<f64> {
    let (m, n) = resolve(p.x.grid(), eps, t)?;
    Ok(orthogonality_m(p, m, n))
}

/// `(Y, 0)`.
pub fn pair_zero(y: &GridPath, x: &GridPath) -> Result<ControlledPair> {
    let yprime = MatrixPath::zeros(*x.grid(), y.dim(), x.dim())?;
    ControlledPair::new(y.clone(), yprime, x.clone(), PairLabel::Zero)
}

/// `(f(X), grad f(X)^T)`, after checking `grad_f` against central finite
/// differences of `f` at a spread of nodes.
pub fn pair_gradient(
    f: &dyn Fn(&[f64]) -> f64,
    grad_f: &dyn Fn(&[f64], &mut [f64]),
    x: &GridPath,
) -> Result<ControlledPair> {
    let grid = *x.grid();
    let d = x.dim();
    check_gradient(f, grad_f, x)?;
    let mut y = Vec::with_capacity(grid.len());
    let mut yp = vec![0.0; grid.len() * d];
    for k in 0..grid.len() {
        let v = f(x.row(k));
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("f(X) at node {k}")));
        }
        y.push(v);
        grad_f(x.row(k), &mut yp[k * d..(k + 1) * d]);
    }
    ControlledPair::new(
        GridPath::new(grid, 1, y)?,
        MatrixPath::new(grid, 1, d, yp)?,
        x.clone(),
        PairLabel::Gradient,
    )
}

fn check_gradient(f: &dyn Fn(&[f64]) -> f64, grad_f: &dyn Fn(&[f64], &mut [f64]), x: &GridPath) -> Result<()> {
    let d = x.dim();
    let steps = x.grid().steps();
    let count = GRADIENT_CHECK_NODES.min(steps + 1);
    let mut g = vec![0.0; d];
    for c in 0..count {
        let node = c * steps / (count - 1).max(1);
        let p = x.row(node).to_vec();
        grad_f(&p, &mut g);
        for i in 0..d {
            let h = 1e-5 * p[i].abs().max(1.0);
            let (mut up, mut dn) = (p.clone(), p.clone());
            up[i] += h;
            dn[i] -= h;
            let fd = (f(&up) - f(&dn)) / (2.0 * h);
            if !(fd - g[i]).abs().le(&(GRADIENT_CHECK_TOL * fd.abs().max(1.0))) {
                return Err(Error::GradientMismatch {
                    node,
                    component: i,
                    supplied: g[i],
                    estimated: fd,
                });
            }
        }
    }
    Ok(())
}

/// `(int Z . dX, Z^T)` with the discrete Itô integral for `Y`.
pub fn pair_integrand(z: &GridPath, x: &GridPath) -> Result<ControlledPair> {
    if z.dim() != x.dim() {
        return Err(Error::InvalidDimension(format!(
            "integrand has dim {}, integrator has dim {}",
            z.dim(),
            x.dim()
        )));
    }
    let zrow = MatrixPath::from_flat(z, 1, x.dim())?;
    let y = ito_oracle(&zrow, x)?;
    ControlledPair::new(y, zrow, x.clone(), PairLabel::Integrand)
}

/// Both sides of `[Y, X]_t = int_0^t Y'_s d[X, X]_s`: the left side from
/// `C(eps, Y^i, X^j)`, the right from the finest-grid bracket increments. Each
/// is an `n x d` matrix.
pub fn gubinelli_bracket_check(p: &ControlledPair, eps: f64, t: f64) -> Result<(Matrix, Matrix)> {
    let (m, n) = resolve(p.x.grid(), eps, t)?;
    let (ny, d) = (p.y.dim(), p.x.dim());
    let mut lhs = Matrix::zeros(ny, d);
    for i in 0..ny {
        let yi = p.y.component(i)?;
        for j in 0..d {
            let xj = p.x.component(j)?;
            lhs.set(i, j, c_eps_m(&yi, &xj, m, n));
        }
    }
    // int Y' d[X,X]: increments of the finest-grid bracket of X with itself
    let xx = discrete_bracket(&p.x, &p.x)?;
    let mut rhs = Matrix::zeros(ny, d);
    for k in 0..n {
        let (b0, b1) = (xx.at(k), xx.at(k + 1));
        let yp = p.yprime.at(k);
        for i in 0..ny {
            for j in 0..d {
                let s: f64 = (0..d).map(|c| yp[i * d + c] * (b1[c * d + j] - b0[c * d + j])).sum();
                rhs.data[i * d + j] += s;
            }
        }
    }
    Ok((lhs, rhs))
}
