//! Experiment configuration: drivers, integrands, scenarios and overrides.

use serde::{Deserialize, Serialize};

use crate::enhance::Flavor;
use crate::error::{Error, Result};
use crate::generate::DEFAULT_MAX_FBM_STEPS;
use crate::harness::stats::Expect;

/// Version tag written into every JSON artifact.
pub const SCHEMA_VERSION: u32 = 1;

/// Sample-path driver `X`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DriverSpec {
    Bm {
        dim: usize,
    },
    Fbm {
        hurst: f64,
        dim: usize,
    },
    /// Euler scheme for `dX = -theta X dt + sigma (1 + a sin X) dB`, componentwise.
    Sde {
        dim: usize,
        theta: f64,
        sigma: f64,
        vol_amplitude: f64,
    },
    /// Deterministic `X^i_t = sin(2 pi (i+1) t) / (i+1)`, identical for every path.
    Smooth {
        dim: usize,
    },
}

impl DriverSpec {
    pub fn dim(&self) -> usize {
        match *self {
            DriverSpec::Bm { dim } | DriverSpec::Fbm { dim, .. } | DriverSpec::Sde { dim, .. } | DriverSpec::Smooth { dim } => dim,
        }
    }
}

/// Scalar functions of `x in R^d`. `Sin`, `Cos` and `Arctan` act on `sum_i x_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalarFn {
    Sin,
    Cos,
    Arctan,
    /// `sum_i x_i^2`.
    Square,
    /// `sum_i x_i`.
    Linear,
}

impl ScalarFn {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let s: f64 = x.iter().sum();
        match self {
            ScalarFn::Sin => s.sin(),
            ScalarFn::Cos => s.cos(),
            ScalarFn::Arctan => s.atan(),
            ScalarFn::Square => x.iter().map(|v| v * v).sum(),
            ScalarFn::Linear => s,
        }
    }

    pub fn grad(&self, x: &[f64], out: &mut [f64]) {
        let s: f64 = x.iter().sum();
        match self {
            ScalarFn::Sin => out.fill(s.cos()),
            ScalarFn::Cos => out.fill(-s.sin()),
            ScalarFn::Arctan => out.fill(1.0 / (1.0 + s * s)),
            ScalarFn::Square => out.iter_mut().zip(x).for_each(|(o, v)| *o = 2.0 * v),
            ScalarFn::Linear => out.fill(1.0),
        }
    }
}

/// Componentwise integrand `Z^i = phi(X^i)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ZFn {
    Sin,
    Identity,
    Const { value: f64 },
}

impl ZFn {
    pub fn eval(&self, v: f64) -> f64 {
        match *self {
            ZFn::Sin => v.sin(),
            ZFn::Identity => v,
            ZFn::Const { value } => value,
        }
    }
}

/// How the controlled pair `(Y, Y')` is built from `X`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IntegrandSpec {
    /// `(f(X), 0)`.
    Zero { f: ScalarFn },
    /// `(f(X), grad f(X)^T)`.
    Gradient { f: ScalarFn },
    /// `(int Z . dX, Z^T)`.
    Integrand { z: ZFn },
    /// `(f(X) + a A, grad f(X)^T)` where `A_t = int_0^t W_s ds` for a Brownian
    /// motion `W` independent of `X`; `A` has zero quadratic variation.
    GradientOrthogonal { f: ScalarFn, amplitude: f64 },
}

impl Default for IntegrandSpec {
    fn default() -> Self {
        IntegrandSpec::Gradient { f: ScalarFn::Sin }
    }
}

/// `Y' -> scale * Y' + shift`, for fault injection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub yprime_scale: f64,
    pub yprime_shift: f64,
}

impl Default for Perturbation {
    fn default() -> Self {
        Self {
            yprime_scale: 1.0,
            yprime_shift: 0.0,
        }
    }
}

impl Perturbation {
    pub fn is_identity(&self) -> bool {
        *self == Self::default()
    }
}

/// What is measured on each path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Rough integral against the Stratonovich or Itô oracle (by flavor); in
    /// the Stratonovich case also `(1/eps) int Y' XX` against half the bracket.
    RoughVsOracle,
    /// Pairwise forward, backward and sewing discrepancies, and sewing deltas.
    ForwardBackwardSewing,
    Orthogonality,
    /// `|[X, X]^R_T - d T|`.
    ScalarQv,
    /// `|C(eps, X^1, X^2)(T)|`.
    Covariation,
    /// Cubic variation statistic of `X^1`.
    CubicVariation,
    /// `(1/eps) int cos(X^1) (X^1_{s+eps} - X^1_s)^2 ds` against its finest-grid oracle.
    WeightedCov,
    TimeReversal,
    /// Chen, geometricity and germ-increment identities on random triples.
    Identities,
}

/// One Monte Carlo experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub id: String,
    pub scenario: Scenario,
    pub driver: DriverSpec,
    #[serde(default)]
    pub integrand: IntegrandSpec,
    #[serde(default)]
    pub perturbation: Perturbation,
    #[serde(default = "default_flavor")]
    pub flavor: Flavor,
    pub steps: usize,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    /// Number of regularization widths `K`.
    pub levels: usize,
    /// Grid multiple of the finest width.
    #[serde(default = "default_finest")]
    pub finest_multiple: usize,
    pub paths: usize,
    pub seed: u64,
    pub final_tol: f64,
    pub slope_min: f64,
    #[serde(default)]
    pub expect: Expect,
}

fn default_flavor() -> Flavor {
    Flavor::Strat
}

fn default_horizon() -> f64 {
    1.0
}

fn default_finest() -> usize {
    1
}

impl ExperimentConfig {
    /// Defaults: gradient pair of `sin`, Stratonovich flavor, `T = 1`, `K = 8`,
    /// finest width one grid step, 200 paths, tolerance `1e-2`, slope `0.1`.
    pub fn new(id: impl Into<String>, scenario: Scenario, driver: DriverSpec, steps: usize) -> Self {
        Self {
            id: id.into(),
            scenario,
            driver,
            integrand: IntegrandSpec::default(),
            perturbation: Perturbation::default(),
            flavor: Flavor::Strat,
            steps,
            horizon: 1.0,
            levels: 8,
            finest_multiple: 1,
            paths: 200,
            seed: DEFAULT_SEED,
            final_tol: 1e-2,
            slope_min: 0.1,
            expect: Expect::Hold,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(format!("{}: {msg}", self.id)));
        if self.id.is_empty() || !self.id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return bad("id must be non-empty and use [A-Za-z0-9_-]".into());
        }
        if self.paths < 1 {
            return bad("paths must be at least 1".into());
        }
        if self.levels < 2 {
            return bad("levels must be at least 2".into());
        }
        if self.steps < 2 || !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad(format!("invalid grid (steps {}, horizon {})", self.steps, self.horizon));
        }
        if self.finest_multiple < 1 {
            return bad("finest_multiple must be at least 1".into());
        }
        let coarsest = (self.finest_multiple as u128) << (self.levels - 1).min(100);
        if self.levels > 64 || coarsest > self.steps as u128 {
            return bad(format!(
                "{} levels from multiple {} exceed the {} grid steps",
                self.levels, self.finest_multiple, self.steps
            ));
        }
        if !(self.final_tol > 0.0) || !self.slope_min.is_finite() {
            return bad("final_tol must be positive and slope_min finite".into());
        }
        let dim = self.driver.dim();
        if dim < 1 {
            return bad("driver dimension must be at least 1".into());
        }
        match self.driver {
            DriverSpec::Fbm { hurst, .. } => {
                if !(hurst > 0.0 && hurst < 1.0) {
                    return bad(format!("hurst {hurst} outside (0, 1)"));
                }
                if self.steps > DEFAULT_MAX_FBM_STEPS {
                    return bad(format!("fbm needs steps <= {DEFAULT_MAX_FBM_STEPS}, got {}", self.steps));
                }
            }
            DriverSpec::Sde {
                theta,
                sigma,
                vol_amplitude,
                ..
            } if ![theta, sigma, vol_amplitude].iter().all(|v| v.is_finite()) => {
                return bad("sde coefficients must be finite".into());
            }
            _ => {}
        }
        if self.scenario == Scenario::Covariation && dim < 2 {
            return bad("covariation needs a driver of dimension at least 2".into());
        }
        if !(self.perturbation.yprime_scale.is_finite() && self.perturbation.yprime_shift.is_finite()) {
            return bad("perturbation must be finite".into());
        }
        Ok(())
    }
}

pub const DEFAULT_SEED: u64 = 20_240_601;

/// Command-line or caller overrides applied to every config of a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub paths: Option<usize>,
    pub steps: Option<usize>,
    pub levels: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(p) = self.paths {
            cfg.paths = p;
        }
        if let Some(n) = self.steps {
            cfg.steps = n;
        }
        if let Some(k) = self.levels {
            cfg.levels = k;
        }
    }
}

/// A config file holds one experiment or a list of them.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum ConfigFile {
    One(Box<ExperimentConfig>),
    Many(Vec<ExperimentConfig>),
}

/// Parses a JSON config file body.
pub fn parse_configs(json: &str) -> Result<Vec<ExperimentConfig>> {
    let parsed: ConfigFile = serde_json::from_str(json).map_err(|e| Error::Config(format!("config: {e}")))?;
    let cfgs = match parsed {
        ConfigFile::One(c) => vec![*c],
        ConfigFile::Many(v) => v,
    };
    if cfgs.is_empty() {
        return Err(Error::Config("config file lists no experiments".into()));
    }
    for c in &cfgs {
        c.validate()?;
    }
    Ok(cfgs)
}
