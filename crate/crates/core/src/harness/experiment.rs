//! Monte Carlo runner: one independent random stream per path, statistics
//! reduced after an order-preserving parallel collect.

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::controlled::{orthogonality_stat, pair_gradient, pair_integrand, pair_zero, ControlledPair, PairLabel};
use crate::enhance::{chen_residual, enhance, geometric_defect, sym_anti, EnhancedPath, Flavor, SecondOrder};
use crate::error::{Error, Result};
use crate::generate::{gen_bm, gen_semimartingale, FbmGenerator, Seed};
use crate::harness::config::{
    DriverSpec, ExperimentConfig, IntegrandSpec, Scenario, SCHEMA_VERSION,
};
use crate::harness::stats::{Expect, LevelStats, Rule};
use crate::linalg::Matrix;
use crate::path::{apply_fn, Grid, GridPath, MatrixPath};
use crate::regcalc::{
    c_eps, cubic_variation_stat, discrete_bracket, ito_oracle, scalar_integrand, scalar_qv, strat_oracle, weighted_cov,
    EpsSchedule,
};
use crate::roughint::{rough_integral_backward, rough_integral_reg, sewing_integral, time_reversal_check, Germ};

/// Paths whose estimates are non-finite are excluded; more than this share fails the run.
pub const MAX_EXCLUDED_FRACTION: f64 = 0.01;
/// Random triples (or pairs) per path in the identities scenario.
pub const IDENTITY_SAMPLES: usize = 100;
/// Random triples per path for the germ-increment identity.
pub const GERM_TRIPLES: usize = 50;
/// Sewing deltas must strictly decrease over this many final levels ...
pub const SEWING_TAIL_WINDOW: usize = 3;
/// ... on at least this share of paths.
pub const SEWING_TAIL_FRACTION: f64 = 0.9;

/// Auxiliary streams live above the path streams so they never collide.
const AUX_STREAM: u64 = 1 << 40;
const TRIPLE_STREAM: u64 = 2 << 40;

/// Summary of one checked identity over all paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub config_id: String,
    pub check: String,
    pub rule: Rule,
    pub expect: Expect,
    pub levels: Vec<LevelStats>,
    pub slope: Option<f64>,
    pub fraction: Option<f64>,
    pub rule_holds: bool,
    /// True when the rule outcome matches the expectation.
    pub pass: bool,
    pub paths_used: usize,
    pub excluded: usize,
    pub detail: String,
}

/// Build and platform information.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Environment {
    pub version: String,
    pub os: String,
    pub arch: String,
}

impl Environment {
    pub fn current() -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            os: std::env::consts::OS.to_string(),
            arch: std::env::consts::ARCH.to_string(),
        }
    }
}

/// Wall-clock cost of one config. Kept out of the verdicts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub config_id: String,
    pub wall_clock_s: f64,
    pub per_path_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub schema_version: u32,
    pub name: String,
    pub configs: Vec<ExperimentConfig>,
    pub reports: Vec<ConvergenceReport>,
    pub environment: Environment,
    pub timing: Vec<Timing>,
}

impl ExperimentResult {
    pub fn pass(&self) -> bool {
        self.reports.iter().all(|r| r.pass)
    }

    pub fn report(&self, config_id: &str, check: &str) -> Option<&ConvergenceReport> {
        self.reports.iter().find(|r| r.config_id == config_id && r.check == check)
    }

    /// Concatenates several results under one name.
    pub fn merge(name: impl Into<String>, parts: Vec<ExperimentResult>) -> Self {
        let mut out = Self {
            schema_version: SCHEMA_VERSION,
            name: name.into(),
            configs: Vec::new(),
            reports: Vec::new(),
            environment: Environment::current(),
            timing: Vec::new(),
        };
        for p in parts {
            out.configs.extend(p.configs);
            out.reports.extend(p.reports);
            out.timing.extend(p.timing);
        }
        out
    }
}

struct CheckSpec {
    name: &'static str,
    rule: Rule,
    expect: Expect,
    scales: Vec<f64>,
}

/// Immutable per-config state shared by all workers.
struct Context<'a> {
    cfg: &'a ExperimentConfig,
    grid: Grid,
    schedule: EpsSchedule,
    fbm: Option<FbmGenerator>,
}

fn checks(ctx: &Context<'_>) -> Vec<CheckSpec> {
    let cfg = ctx.cfg;
    let eps = ctx.schedule.eps();
    let two_part = Rule::TwoPart {
        final_tol: cfg.final_tol,
        slope_min: cfg.slope_min,
    };
    let spec = |name, rule, scales: &Vec<f64>| CheckSpec {
        name,
        rule,
        expect: cfg.expect,
        scales: scales.clone(),
    };
    let single = vec![ctx.grid.step()];
    match cfg.scenario {
        Scenario::RoughVsOracle => {
            let mut v = vec![spec(
                if cfg.flavor == Flavor::Strat { "rough_vs_strat" } else { "rough_vs_ito" },
                two_part,
                &eps,
            )];
            if cfg.flavor == Flavor::Strat {
                v.push(spec("area_term_vs_half_bracket", two_part, &eps));
            }
            v
        }
        Scenario::ForwardBackwardSewing => {
            let l_max = sewing_levels(&ctx.grid);
            let blocks: Vec<f64> = (1..=l_max).map(|l| ((1usize << (l_max - l)) as f64) * ctx.grid.step()).collect();
            vec![
                spec("forward_vs_backward", two_part, &eps),
                spec("forward_vs_sewing", two_part, &eps),
                spec("backward_vs_sewing", two_part, &eps),
                spec(
                    "sewing_delta",
                    Rule::MonotoneTail {
                        window: SEWING_TAIL_WINDOW,
                        min_fraction: SEWING_TAIL_FRACTION,
                    },
                    &blocks,
                ),
            ]
        }
        Scenario::Orthogonality => vec![spec("orthogonality", two_part, &eps)],
        Scenario::ScalarQv => vec![spec(
            "scalar_qv",
            Rule::TwoPart {
                final_tol: cfg.final_tol * cfg.driver.dim() as f64,
                slope_min: cfg.slope_min,
            },
            &eps,
        )],
        Scenario::Covariation => vec![spec("covariation", two_part, &eps)],
        Scenario::CubicVariation => vec![spec(
            "cubic_variation",
            Rule::Decay {
                slope_min: cfg.slope_min,
            },
            &eps,
        )],
        Scenario::WeightedCov => vec![spec("weighted_cov", two_part, &eps)],
        Scenario::TimeReversal => vec![spec("time_reversal", Rule::MaxAtFinest { tol: cfg.final_tol }, &eps)],
        Scenario::Identities => {
            let bound = Rule::MaxAtFinest { tol: cfg.final_tol };
            vec![
                spec("chen_ito", bound, &single),
                spec("chen_strat", bound, &single),
                spec("geometric_strat", bound, &single),
                spec("ito_defect_vs_half_bracket", bound, &single),
                spec("germ_increment", bound, &single),
            ]
        }
    }
}

fn sewing_levels(grid: &Grid) -> usize {
    usize::BITS as usize - 1 - grid.steps().leading_zeros() as usize
}

fn driver(ctx: &Context<'_>, path: u64) -> Result<GridPath> {
    let seed = Seed::new(ctx.cfg.seed, path);
    let grid = ctx.grid;
    match ctx.cfg.driver {
        DriverSpec::Bm { dim } => gen_bm(grid, dim, seed),
        DriverSpec::Fbm { dim, .. } => ctx.fbm.as_ref().expect("fbm generator").sample(dim, seed),
        DriverSpec::Sde {
            dim,
            theta,
            sigma,
            vol_amplitude,
        } => gen_semimartingale(
            grid,
            dim,
            &vec![0.0; dim],
            &|_, x, b| b.iter_mut().zip(x).for_each(|(o, v)| *o = -theta * v),
            &|_, x, s| {
                s.fill(0.0);
                for i in 0..dim {
                    s[i * dim + i] = sigma * (1.0 + vol_amplitude * x[i].sin());
                }
            },
            seed,
        ),
        DriverSpec::Smooth { dim } => GridPath::from_fn(grid, dim, |t, out| {
            for (i, o) in out.iter_mut().enumerate() {
                let f = (i + 1) as f64;
                *o = (2.0 * std::f64::consts::PI * f * t).sin() / f;
            }
        }),
    }
}

fn pair(ctx: &Context<'_>, x: &GridPath, path: u64) -> Result<ControlledPair> {
    let cfg = ctx.cfg;
    let p = match cfg.integrand {
        IntegrandSpec::Zero { f } => {
            let (y, _) = apply_fn(x, &|v| f.eval(v), None)?;
            pair_zero(&y, x)?
        }
        IntegrandSpec::Gradient { f } => pair_gradient(&|v| f.eval(v), &|v, g| f.grad(v, g), x)?,
        IntegrandSpec::Integrand { z } => {
            let zp = GridPath::new(*x.grid(), x.dim(), x.values().iter().map(|v| z.eval(*v)).collect())?;
            pair_integrand(&zp, x)?
        }
        IntegrandSpec::GradientOrthogonal { f, amplitude } => {
            let g = pair_gradient(&|v| f.eval(v), &|v, o| f.grad(v, o), x)?;
            let w = gen_bm(ctx.grid, 1, Seed::new(cfg.seed, AUX_STREAM + path))?;
            let h = ctx.grid.step();
            let mut acc = 0.0;
            let mut y = Vec::with_capacity(ctx.grid.len());
            for k in 0..ctx.grid.len() {
                y.push(g.y().scalar(k) + amplitude * acc);
                acc += w.scalar(k) * h;
            }
            let y = GridPath::new(ctx.grid, 1, y)?;
            ControlledPair::new(y, g.yprime().clone(), x.clone(), PairLabel::Custom)?
        }
    };
    let pert = cfg.perturbation;
    if pert.is_identity() {
        Ok(p)
    } else {
        p.with_yprime(p.yprime().scaled(pert.yprime_scale).shifted(pert.yprime_shift))
    }
}

fn row_gap(a: &Matrix, b: &[f64]) -> f64 {
    a.data.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// One value per check per level for a single path.
fn eval_path(ctx: &Context<'_>, path: u64) -> Result<Vec<Vec<f64>>> {
    let cfg = ctx.cfg;
    let grid = ctx.grid;
    let t = grid.horizon();
    let n = grid.steps();
    let eps = ctx.schedule.eps();
    let x = driver(ctx, path)?;
    let out = match cfg.scenario {
        Scenario::RoughVsOracle => {
            let p = pair(ctx, &x, path)?;
            let e = enhance(&x, cfg.flavor)?;
            let integrand = scalar_integrand(p.y(), x.dim())?;
            let oracle = match cfg.flavor {
                Flavor::Strat => strat_oracle(&integrand, &x)?,
                Flavor::Ito => ito_oracle(&integrand, &x)?,
            };
            let target = oracle.row(n);
            let main = eps
                .iter()
                .map(|&w| Ok(row_gap(&rough_integral_reg(&p, &e, w, t)?, target)))
                .collect::<Result<Vec<_>>>()?;
            let mut out = vec![main];
            if cfg.flavor == Flavor::Strat {
                let area_only = ControlledPair::new(GridPath::zeros(grid, p.y().dim())?, p.yprime().clone(), x.clone(), PairLabel::Custom)?;
                let half: Vec<f64> = discrete_bracket(p.y(), &x)?.at(n).iter().map(|v| 0.5 * v).collect();
                out.push(
                    eps.iter()
                        .map(|&w| Ok(row_gap(&rough_integral_reg(&area_only, &e, w, t)?, &half)))
                        .collect::<Result<Vec<_>>>()?,
                );
            }
            out
        }
        Scenario::ForwardBackwardSewing => {
            let p = pair(ctx, &x, path)?;
            let e = enhance(&x, cfg.flavor)?;
            let nodes: Vec<f64> = (1..=n).map(|k| grid.node(k)).collect();
            let sew = sewing_integral(&p, &e, &nodes, f64::MIN_POSITIVE, usize::MAX)?;
            let s_t = sew.values.last().expect("requested nodes");
            let (mut fb, mut fs, mut bs) = (Vec::new(), Vec::new(), Vec::new());
            for &w in &eps {
                let f = rough_integral_reg(&p, &e, w, t)?;
                let b = rough_integral_backward(&p, &e, w, t)?;
                fb.push(f.sub(&b).max_norm());
                fs.push(f.sub(s_t).max_norm());
                bs.push(b.sub(s_t).max_norm());
            }
            let mut deltas = sew.deltas;
            // an exactly converged run stops early; later refinements would not move
            deltas.resize(sewing_levels(&grid), 0.0);
            vec![fb, fs, bs, deltas]
        }
        Scenario::Orthogonality => {
            let p = pair(ctx, &x, path)?;
            vec![eps.iter().map(|&w| orthogonality_stat(&p, w, t)).collect::<Result<Vec<_>>>()?]
        }
        Scenario::ScalarQv => {
            let target = x.dim() as f64 * t;
            vec![eps.iter().map(|&w| Ok((scalar_qv(&x, w, t)? - target).abs())).collect::<Result<Vec<_>>>()?]
        }
        Scenario::Covariation => {
            let (x1, x2) = (x.component(0)?, x.component(1)?);
            vec![eps.iter().map(|&w| Ok(c_eps(&x1, &x2, w, t)?.abs())).collect::<Result<Vec<_>>>()?]
        }
        Scenario::CubicVariation => {
            let x1 = x.component(0)?;
            vec![eps.iter().map(|&w| cubic_variation_stat(&x1, w, t)).collect::<Result<Vec<_>>>()?]
        }
        Scenario::WeightedCov => {
            let x1 = x.component(0)?;
            let h = GridPath::new(grid, 1, x1.values().iter().map(|v| v.cos()).collect())?;
            let oracle: f64 = (0..n).map(|k| h.scalar(k) * (x1.scalar(k + 1) - x1.scalar(k)).powi(2)).sum();
            vec![eps
                .iter()
                .map(|&w| Ok((weighted_cov(&h, &x1, &x1, w, t)? - oracle).abs()))
                .collect::<Result<Vec<_>>>()?]
        }
        Scenario::TimeReversal => {
            let p = pair(ctx, &x, path)?;
            let e = enhance(&x, cfg.flavor)?;
            let rep = time_reversal_check(&p, &e, &ctx.schedule, t)?;
            vec![rep.levels.iter().map(|l| l.discrepancy).collect()]
        }
        Scenario::Identities => identities(ctx, &x, path)?,
    };
    for v in out.iter().flatten() {
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("estimate on path {path}")));
        }
    }
    Ok(out)
}

fn identities(ctx: &Context<'_>, x: &GridPath, path: u64) -> Result<Vec<Vec<f64>>> {
    let n = ctx.grid.steps();
    let mut rng = Seed::new(ctx.cfg.seed, TRIPLE_STREAM + path).rng();
    let triple = |rng: &mut rand_chacha::ChaCha20Rng| {
        let mut v = [rng.gen_range(0..=n), rng.gen_range(0..=n), rng.gen_range(0..=n)];
        v.sort_unstable();
        v
    };
    let ito = enhance(x, Flavor::Ito)?;
    let strat = enhance(x, Flavor::Strat)?;
    let norm = 1.0 + x.max_abs().powi(2);
    let (mut chen_i, mut chen_s, mut geo, mut defect) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    let bracket = discrete_bracket(x, x)?;
    for _ in 0..IDENTITY_SAMPLES {
        let [j, m, k] = triple(&mut rng);
        chen_i = chen_i.max(chen_residual(&ito, j, m, k)? / norm);
        chen_s = chen_s.max(chen_residual(&strat, j, m, k)? / norm);
        geo = geo.max(geometric_defect(&strat, j, k));
        defect = defect.max(ito_defect_gap(&ito, &bracket, j, k));
    }
    let p = pair(ctx, x, path)?;
    let germ = Germ::new(&p, &strat)?;
    let mut germ_gap = 0.0_f64;
    for _ in 0..GERM_TRIPLES {
        let [j, m, k] = triple(&mut rng);
        let (rem, der) = germ.delta2_terms(j, m, k);
        germ_gap = germ_gap.max(germ.delta2(j, m, k).add(&rem).add(&der).max_norm());
    }
    Ok(vec![vec![chen_i], vec![chen_s], vec![geo], vec![defect], vec![germ_gap]])
}

/// `sym(XX^ito_{j,k}) - ΔX ΔX^T / 2` against minus half the finest-grid bracket over `[j, k]`.
fn ito_defect_gap(e: &EnhancedPath, bracket: &MatrixPath, j: usize, k: usize) -> f64 {
    let x = e.base();
    let dx: Vec<f64> = x.row(k).iter().zip(x.row(j)).map(|(a, b)| a - b).collect();
    let (sym, _) = sym_anti(&e.block(j, k));
    let defect = sym.sub(&Matrix::outer(&dx, &dx).scale(0.5));
    let half: Vec<f64> = bracket.at(k).iter().zip(bracket.at(j)).map(|(a, b)| -0.5 * (a - b)).collect();
    row_gap(&defect, &half)
}

/// Runs one config on `jobs` worker threads (all cores when `None`).
pub fn run_experiment(cfg: &ExperimentConfig, jobs: Option<usize>) -> Result<ExperimentResult> {
    cfg.validate()?;
    let started = Instant::now();
    let grid = Grid::new(cfg.horizon, cfg.steps)?;
    let schedule = EpsSchedule::dyadic(&grid, cfg.levels, cfg.finest_multiple)?;
    let fbm = match cfg.driver {
        DriverSpec::Fbm { hurst, .. } => Some(FbmGenerator::new(grid, hurst)?),
        _ => None,
    };
    let ctx = Context {
        cfg,
        grid,
        schedule,
        fbm,
    };
    let specs = checks(&ctx);
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = builder.build().map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let per_path: Vec<Result<Vec<Vec<f64>>>> =
        pool.install(|| (0..cfg.paths as u64).into_par_iter().map(|i| eval_path(&ctx, i)).collect());
    let mut kept = Vec::with_capacity(per_path.len());
    let mut excluded = 0;
    for (i, r) in per_path.into_iter().enumerate() {
        match r {
            Ok(v) => kept.push(v),
            Err(Error::NonFinite(msg)) => {
                log::warn!("{}: path {i} excluded: {msg}", cfg.id);
                excluded += 1;
            }
            Err(e) => return Err(e),
        }
    }
    let too_many = excluded as f64 > MAX_EXCLUDED_FRACTION * cfg.paths as f64;
    let reports = specs
        .into_iter()
        .enumerate()
        .map(|(c, spec)| summarize(cfg, spec, kept.iter().map(|p| p[c].clone()).collect(), excluded, too_many))
        .collect();
    let wall = started.elapsed().as_secs_f64();
    Ok(ExperimentResult {
        schema_version: SCHEMA_VERSION,
        name: cfg.id.clone(),
        configs: vec![cfg.clone()],
        reports,
        environment: Environment::current(),
        timing: vec![Timing {
            config_id: cfg.id.clone(),
            wall_clock_s: wall,
            per_path_ms: 1e3 * wall / cfg.paths as f64,
        }],
    })
}

fn summarize(cfg: &ExperimentConfig, spec: CheckSpec, samples: Vec<Vec<f64>>, excluded: usize, too_many: bool) -> ConvergenceReport {
    let base = ConvergenceReport {
        config_id: cfg.id.clone(),
        check: spec.name.to_string(),
        rule: spec.rule,
        expect: spec.expect,
        levels: Vec::new(),
        slope: None,
        fraction: None,
        rule_holds: false,
        pass: spec.expect == Expect::Violate,
        paths_used: samples.len(),
        excluded,
        detail: String::new(),
    };
    if samples.is_empty() || too_many {
        return ConvergenceReport {
            pass: false,
            detail: format!("{excluded} of {} paths excluded as non-finite", cfg.paths),
            ..base
        };
    }
    let levels: Vec<LevelStats> = spec
        .scales
        .iter()
        .enumerate()
        .map(|(i, s)| LevelStats::from_samples(*s, &samples.iter().map(|p| p[i]).collect::<Vec<_>>()))
        .collect();
    let outcome = spec.rule.evaluate(&samples, &levels);
    ConvergenceReport {
        levels,
        slope: outcome.slope,
        fraction: outcome.fraction,
        rule_holds: outcome.holds,
        pass: outcome.holds == (spec.expect == Expect::Hold),
        detail: outcome.detail,
        ..base
    }
}
