//! Monte Carlo summary statistics and verdict rules.

use serde::{Deserialize, Serialize};

/// Linearly interpolated quantile of already sorted finite samples.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty sample");
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let w = pos - lo as f64;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] * (1.0 - w) + sorted[hi] * w
    }
}

/// Location and spread of one column of samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelStats {
    /// Regularization width, or block width for sewing levels.
    pub scale: f64,
    pub median: f64,
    pub mean: f64,
    pub q10: f64,
    pub q90: f64,
    pub max: f64,
}

impl LevelStats {
    /// Order-independent: samples are sorted before anything is summed.
    pub fn from_samples(scale: f64, samples: &[f64]) -> Self {
        let mut s = samples.to_vec();
        s.sort_by(f64::total_cmp);
        let mean = s.iter().sum::<f64>() / s.len() as f64;
        Self {
            scale,
            median: quantile_sorted(&s, 0.5),
            mean,
            q10: quantile_sorted(&s, 0.1),
            q90: quantile_sorted(&s, 0.9),
            max: s[s.len() - 1],
        }
    }
}

/// Least-squares slope of `ln y` against `ln x`, over points with `y > 0`.
/// Needs at least three such points.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// How a check's samples turn into a verdict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Rule {
    /// Final median below `final_tol` and log-log slope of medians above `slope_min`.
    TwoPart { final_tol: f64, slope_min: f64 },
    /// Last median below the first and slope above `slope_min`.
    Decay { slope_min: f64 },
    /// Every path's value at the last level at most `tol`.
    MaxAtFinest { tol: f64 },
    /// Fraction of paths whose last `window` values strictly decrease is at least `min_fraction`.
    MonotoneTail { window: usize, min_fraction: f64 },
}

/// Whether the rule is meant to hold. Fault-injection runs expect failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Expect {
    #[default]
    Hold,
    Violate,
}

/// Outcome of a rule on one sample matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleOutcome {
    pub holds: bool,
    pub slope: Option<f64>,
    /// Share of paths meeting a per-path condition, for [`Rule::MonotoneTail`].
    pub fraction: Option<f64>,
    pub detail: String,
}

impl Rule {
    /// `samples[path][level]`, all finite, with `levels` computed from them.
    pub fn evaluate(&self, samples: &[Vec<f64>], levels: &[LevelStats]) -> RuleOutcome {
        let scales: Vec<f64> = levels.iter().map(|l| l.scale).collect();
        let medians: Vec<f64> = levels.iter().map(|l| l.median).collect();
        let slope = loglog_slope(&scales, &medians);
        let all_zero = medians.iter().all(|m| *m == 0.0);
        let last = *medians.last().unwrap_or(&f64::NAN);
        let (holds, fraction, detail) = match *self {
            Rule::TwoPart { final_tol, slope_min } => {
                if all_zero {
                    (true, None, "all medians exactly zero".to_string())
                } else {
                    let ok = last < final_tol && slope.is_some_and(|s| s > slope_min);
                    (ok, None, format!("final median {last:.3e} (< {final_tol:.1e}), slope {} (> {slope_min})", fmt_opt(slope)))
                }
            }
            Rule::Decay { slope_min } => {
                let first = medians[0];
                let ok = all_zero || (last < first && slope.is_some_and(|s| s > slope_min));
                (ok, None, format!("median {first:.3e} -> {last:.3e}, slope {} (> {slope_min})", fmt_opt(slope)))
            }
            Rule::MaxAtFinest { tol } => {
                let worst = samples.iter().map(|s| *s.last().unwrap()).fold(0.0, f64::max);
                (worst <= tol, None, format!("max over paths {worst:.3e} (<= {tol:.1e})"))
            }
            Rule::MonotoneTail { window, min_fraction } => {
                let hits = samples
                    .iter()
                    .filter(|s| s.len() >= window && s[s.len() - window..].windows(2).all(|w| w[1] < w[0]))
                    .count();
                let frac = hits as f64 / samples.len() as f64;
                (
                    frac >= min_fraction,
                    Some(frac),
                    format!("{hits}/{} paths strictly decreasing over the last {window} levels (>= {min_fraction})", samples.len()),
                )
            }
        };
        RuleOutcome {
            holds,
            slope,
            fraction,
            detail,
        }
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), |s| format!("{s:.3}"))
}
