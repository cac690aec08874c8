//! Brute-force references built from explicitly padded node tables. They share
//! nothing with the library beyond reading raw path values.

#![allow(dead_code)]

use roughreg::{Flavor, GridPath};

/// Rows `0..=N + pad`, with every row past `N` a copy of row `N`.
pub fn padded(x: &GridPath, pad: usize) -> Vec<Vec<f64>> {
    let n = x.grid().steps();
    (0..=n + pad).map(|k| x.row(k.min(n)).to_vec()).collect()
}

/// `(Δ / eps) Σ_{k < n} term(k, k + m)` written with the physical widths.
pub fn window_sum(step: f64, m: usize, n: usize, mut term: impl FnMut(usize, usize) -> f64) -> f64 {
    let eps = m as f64 * step;
    let mut s = 0.0;
    for k in 0..n {
        s += term(k, k + m) * step;
    }
    s / eps
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Direct accumulation `Σ_{i=j}^{k-1} (M_i - X_j) ⊗ (X_{i+1} - X_i)` with
/// `M_i` the left point or the midpoint, as a row-major `d x d` table.
pub fn iterated_block(rows: &[Vec<f64>], flavor: Flavor, j: usize, k: usize) -> Vec<f64> {
    let d = rows[0].len();
    let mut out = vec![0.0; d * d];
    for i in j..k {
        for a in 0..d {
            let mid = match flavor {
                Flavor::Ito => rows[i][a],
                Flavor::Strat => 0.5 * (rows[i][a] + rows[i + 1][a]),
            };
            let w = mid - rows[j][a];
            for b in 0..d {
                out[a * d + b] += w * (rows[i + 1][b] - rows[i][b]);
            }
        }
    }
    out
}

/// Germ `Y_j ΔX^T + Y'_j XX_{j,k}` for a scalar `Y` from padded tables.
pub fn germ(y: &[Vec<f64>], yp: &[Vec<f64>], x: &[Vec<f64>], flavor: Flavor, j: usize, k: usize) -> Vec<f64> {
    let d = x[0].len();
    let xx = iterated_block(x, flavor, j, k);
    (0..d)
        .map(|b| y[j][0] * (x[k][b] - x[j][b]) + (0..d).map(|a| yp[j][a] * xx[a * d + b]).sum::<f64>())
        .collect()
}

pub fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Median of a sample, sorted in place.
pub fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}
