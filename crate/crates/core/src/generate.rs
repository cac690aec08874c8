//! Seeded path generators: Brownian motion, exact fractional Brownian motion
//! and Euler–Maruyama semimartingales.
//!
//! Every generator draws its Gaussian variates step by step and, within a
//! step, component by component. Sharing that order is what makes `gen_bm`,
//! `gen_fbm` at `H = 1/2` and a driftless unit-volatility `gen_semimartingale`
//! agree on the same [`Seed`].

use log::warn;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::path::{Grid, GridPath};

/// Default upper bound on `N` for the exact fBm factorization.
pub const DEFAULT_MAX_FBM_STEPS: usize = 4096;

/// Diagonal jitter added when the fGn factorization loses positive definiteness.
pub const FBM_JITTER: f64 = 1e-12;

/// Master seed plus per-path stream index.
///
/// Streams are ChaCha20 stream ids, so stream `s` of master `m` never overlaps
/// stream `s'`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Seed {
    pub master: u64,
    pub stream: u64,
}

impl Seed {
    pub fn new(master: u64, stream: u64) -> Self {
        Self { master, stream }
    }

    pub fn rng(&self) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.master);
        rng.set_stream(self.stream);
        rng
    }
}

fn check_dim(d: usize) -> Result<()> {
    if d < 1 {
        return Err(Error::InvalidDimension(format!("driver dimension must be >= 1, got {d}")));
    }
    Ok(())
}

/// Standard `d`-dimensional Brownian motion started at 0.
pub fn gen_bm(grid: Grid, d: usize, seed: Seed) -> Result<GridPath> {
    check_dim(d)?;
    let mut rng = seed.rng();
    let sd = grid.step().sqrt();
    let mut values = vec![0.0; grid.len() * d];
    for k in 0..grid.steps() {
        for i in 0..d {
            let z: f64 = StandardNormal.sample(&mut rng);
            values[(k + 1) * d + i] = values[k * d + i] + sd * z;
        }
    }
    GridPath::new(grid, d, values)
}

/// Exact fBm sampler built from the Durbin–Levinson factorization of the
/// fractional Gaussian noise covariance on a fixed grid.
///
/// The factor is `O(N^2)` memory and is meant to be built once and shared
/// across Monte Carlo streams.
#[derive(Debug, Clone)]
pub struct FbmGenerator {
    grid: Grid,
    hurst: f64,
    /// Row `k` (for `k >= 1`) holds the `k` prediction coefficients, oldest first.
    coeffs: Vec<f64>,
    /// Innovation standard deviations, unit-step scale.
    sigmas: Vec<f64>,
    scale: f64,
    jittered: bool,
}

impl FbmGenerator {
    pub fn new(grid: Grid, hurst: f64) -> Result<Self> {
        Self::with_max_steps(grid, hurst, DEFAULT_MAX_FBM_STEPS)
    }

    pub fn with_max_steps(grid: Grid, hurst: f64, max_steps: usize) -> Result<Self> {
        if !(hurst > 0.0 && hurst < 1.0) {
            return Err(Error::InvalidParameter(format!("Hurst index must lie in (0, 1), got {hurst}")));
        }
        if grid.steps() > max_steps {
            return Err(Error::FbmGridTooLarge {
                steps: grid.steps(),
                max: max_steps,
            });
        }
        let (coeffs, sigmas, jittered) = match levinson(grid.steps(), hurst, 0.0) {
            Ok((c, s)) => (c, s, false),
            Err(step) => {
                warn!("fGn factorization lost positive definiteness at step {step}; retrying with jitter {FBM_JITTER}");
                let (c, s) = levinson(grid.steps(), hurst, FBM_JITTER).map_err(|step| Error::Factorization { step })?;
                (c, s, true)
            }
        };
        Ok(Self {
            grid,
            hurst,
            coeffs,
            sigmas,
            scale: grid.step().powf(hurst),
            jittered,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    /// Whether the factorization needed diagonal jitter.
    pub fn jittered(&self) -> bool {
        self.jittered
    }

    /// `d` independent fBm components.
    pub fn sample(&self, d: usize, seed: Seed) -> Result<GridPath> {
        check_dim(d)?;
        let n = self.grid.steps();
        let mut rng = seed.rng();
        // fGn per component, contiguous so the prediction is a plain dot product
        let mut noise = vec![vec![0.0; n]; d];
        for k in 0..n {
            let row = &self.coeffs[k * (k.saturating_sub(1)) / 2..][..k];
            for comp in noise.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                let pred: f64 = row.iter().zip(&comp[..k]).map(|(a, b)| a * b).sum();
                comp[k] = pred + self.sigmas[k] * z;
            }
        }
        let mut values = vec![0.0; self.grid.len() * d];
        for k in 0..n {
            for i in 0..d {
                values[(k + 1) * d + i] = values[k * d + i] + self.scale * noise[i][k];
            }
        }
        GridPath::new(self.grid, d, values)
    }
}

/// Unit-step fGn autocovariance.
pub(crate) fn fgn_autocov(k: usize, hurst: f64) -> f64 {
    let h2 = 2.0 * hurst;
    let k = k as f64;
    0.5 * ((k + 1.0).powf(h2) - 2.0 * k.powf(h2) + (k - 1.0).abs().powf(h2))
}

/// Durbin–Levinson recursion. Returns the packed prediction rows (oldest
/// coefficient first) and innovation standard deviations, or the failing step.
fn levinson(n: usize, hurst: f64, jitter: f64) -> std::result::Result<(Vec<f64>, Vec<f64>), usize> {
    let gamma: Vec<f64> = (0..=n).map(|k| fgn_autocov(k, hurst)).collect();
    let mut packed = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    let mut sigmas = Vec::with_capacity(n);
    let mut v = gamma[0] + jitter;
    sigmas.push(v.sqrt());
    // phi[j-1] = phi_{k,j}, coefficient on the noise k-j steps back
    let mut phi: Vec<f64> = Vec::with_capacity(n);
    for k in 1..n {
        let acc: f64 = phi.iter().enumerate().map(|(j, p)| p * gamma[k - 1 - j]).sum();
        let kappa = (gamma[k] - acc) / v;
        let prev = phi.clone();
        for j in 0..phi.len() {
            phi[j] = prev[j] - kappa * prev[prev.len() - 1 - j];
        }
        phi.push(kappa);
        v *= 1.0 - kappa * kappa;
        if !(v > 0.0 && v.is_finite()) {
            return Err(k);
        }
        sigmas.push(v.sqrt());
        // stored oldest-first: coefficient of noise index l (l = 0..k) is phi_{k, k-l}
        packed.extend(phi.iter().rev());
    }
    Ok((packed, sigmas))
}

/// One-shot exact fBm. Prefer [`FbmGenerator`] when sampling many paths.
pub fn gen_fbm(grid: Grid, hurst: f64, d: usize, seed: Seed) -> Result<GridPath> {
    FbmGenerator::new(grid, hurst)?.sample(d, seed)
}

/// Euler–Maruyama path `X_{k+1} = X_k + b(t_k, X_k) dt + sigma(t_k, X_k) dB_k`
/// started at `x0`, with `sigma` a `d x d` row-major matrix.
pub fn gen_semimartingale(
    grid: Grid,
    d: usize,
    x0: &[f64],
    drift: &dyn Fn(f64, &[f64], &mut [f64]),
    vol: &dyn Fn(f64, &[f64], &mut [f64]),
    seed: Seed,
) -> Result<GridPath> {
    check_dim(d)?;
    if x0.len() != d {
        return Err(Error::InvalidDimension(format!("initial value has length {}, expected {d}", x0.len())));
    }
    let mut rng = seed.rng();
    let dt = grid.step();
    let sd = dt.sqrt();
    let mut values = vec![0.0; grid.len() * d];
    values[..d].copy_from_slice(x0);
    let mut b = vec![0.0; d];
    let mut sig = vec![0.0; d * d];
    let mut db = vec![0.0; d];
    for k in 0..grid.steps() {
        for v in db.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *v = sd * z;
        }
        let t = grid.node(k);
        let (head, tail) = values.split_at_mut((k + 1) * d);
        let cur = &head[k * d..];
        drift(t, cur, &mut b);
        vol(t, cur, &mut sig);
        for i in 0..d {
            let noise: f64 = (0..d).map(|j| sig[i * d + j] * db[j]).sum();
            let next = cur[i] + (b[i] * dt + noise);
            if !next.is_finite() {
                return Err(Error::NonFinite(format!("Euler step {k}, component {i}")));
            }
            tail[i] = next;
        }
    }
    GridPath::new(grid, d, values)
}
