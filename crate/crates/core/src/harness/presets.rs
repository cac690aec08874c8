//! Bundled experiment presets.

use crate::enhance::Flavor;
use crate::error::{Error, Result};
use crate::harness::config::{DriverSpec, ExperimentConfig, IntegrandSpec, Overrides, ScalarFn, Scenario, ZFn};
use crate::harness::experiment::{run_experiment, ExperimentResult};
use crate::harness::stats::Expect;

/// Default grid for Brownian and SDE drivers.
pub const BM_STEPS: usize = 1 << 14;
/// Default grid for fBm drivers, bounded by the exact factorization.
pub const FBM_STEPS: usize = 1 << 12;

pub const PRESETS: &[&str] = &[
    "theorem_66",
    "theorem_69",
    "prop_64",
    "section2",
    "orthogonality",
    "time_reversal",
    "identities",
];

fn bm(d: usize) -> DriverSpec {
    DriverSpec::Bm { dim: d }
}

fn fbm(hurst: f64, d: usize) -> DriverSpec {
    DriverSpec::Fbm { hurst, dim: d }
}

/// Rough integral against Stratonovich sums, with the area term against half
/// the bracket.
pub fn theorem_66() -> Vec<ExperimentConfig> {
    let base = |id: &str, driver| ExperimentConfig::new(id, Scenario::RoughVsOracle, driver, BM_STEPS);
    let mut integrand = base("integrand_const_bm2", bm(2));
    integrand.integrand = IntegrandSpec::Integrand {
        z: ZFn::Const { value: 0.7 },
    };
    let mut ortho = base("gradient_orthogonal_bm2", bm(2));
    ortho.integrand = IntegrandSpec::GradientOrthogonal {
        f: ScalarFn::Sin,
        amplitude: 1.0,
    };
    let sde = base(
        "gradient_sin_sde2",
        DriverSpec::Sde {
            dim: 2,
            theta: 0.5,
            sigma: 1.0,
            vol_amplitude: 0.3,
        },
    );
    // Y' + 1 is not a derivative of Y = sin(B_1 + B_2): the area term picks up
    // half the bracket of X, so the identity must break.
    let mut wrong = base("wrong_derivative_bm2", bm(2));
    wrong.perturbation.yprime_shift = 1.0;
    wrong.expect = Expect::Violate;
    vec![base("gradient_sin_bm2", bm(2)), integrand, ortho, sde, wrong]
}

/// Rough integral with the Itô enhancement against left-point sums.
pub fn theorem_69() -> Vec<ExperimentConfig> {
    let base = |id: &str, integrand| {
        let mut c = ExperimentConfig::new(id, Scenario::RoughVsOracle, bm(2), BM_STEPS);
        c.flavor = Flavor::Ito;
        c.integrand = integrand;
        c
    };
    vec![
        base("integrand_sin_bm2", IntegrandSpec::Integrand { z: ZFn::Sin }),
        base(
            "integrand_zero_bm2",
            IntegrandSpec::Integrand {
                z: ZFn::Const { value: 0.0 },
            },
        ),
        base("gradient_arctan_bm2", IntegrandSpec::Gradient { f: ScalarFn::Arctan }),
    ]
}

/// Forward, backward and sewing integrals on fBm with `H` in `(1/3, 1/2)`.
pub fn prop_64() -> Vec<ExperimentConfig> {
    [("gradient_sin_fbm040", 0.4), ("gradient_sin_fbm045", 0.45)]
        .into_iter()
        .map(|(id, h)| {
            let mut c = ExperimentConfig::new(id, Scenario::ForwardBackwardSewing, fbm(h, 1), FBM_STEPS);
            c.paths = 100;
            c
        })
        .collect()
}

/// Quadratic variation, covariation of independent fBm, cubic variation and
/// weighted covariation.
pub fn section2() -> Vec<ExperimentConfig> {
    let mut qv = ExperimentConfig::new("qv_bm2", Scenario::ScalarQv, bm(2), BM_STEPS);
    qv.final_tol = 0.05;
    let cov = ExperimentConfig::new("cov_fbm070", Scenario::Covariation, fbm(0.7, 2), FBM_STEPS);
    let mut cubic = ExperimentConfig::new("cubic_fbm035", Scenario::CubicVariation, fbm(0.35, 1), FBM_STEPS);
    cubic.slope_min = 0.0;
    let mut wcov = ExperimentConfig::new("weighted_cov_bm1", Scenario::WeightedCov, bm(1), BM_STEPS);
    wcov.final_tol = 0.05;
    vec![qv, cov, cubic, wcov]
}

/// Decay of the orthogonality statistic for gradient pairs, plus a wrong
/// derivative that must not decay.
pub fn orthogonality() -> Vec<ExperimentConfig> {
    let base = |id: &str, driver, steps| {
        let mut c = ExperimentConfig::new(id, Scenario::Orthogonality, driver, steps);
        c.final_tol = 5e-2;
        c
    };
    let mut fault = base("ortho_bm1_double_derivative", bm(1), BM_STEPS);
    fault.perturbation.yprime_scale = 2.0;
    fault.expect = Expect::Violate;
    vec![
        base("ortho_bm1", bm(1), BM_STEPS),
        base("ortho_fbm035", fbm(0.35, 1), FBM_STEPS),
        base("ortho_fbm040", fbm(0.4, 1), FBM_STEPS),
        base("ortho_fbm045", fbm(0.45, 1), FBM_STEPS),
        fault,
    ]
}

/// Backward integral against the reversed forward integral.
pub fn time_reversal() -> Vec<ExperimentConfig> {
    let mut c = ExperimentConfig::new("reversal_bm1", Scenario::TimeReversal, bm(1), FBM_STEPS);
    c.paths = 20;
    c.final_tol = 5e-3;
    vec![c]
}

/// Chen, geometricity and germ-increment identities.
pub fn identities() -> Vec<ExperimentConfig> {
    let mut c = ExperimentConfig::new("identities_bm2", Scenario::Identities, bm(2), FBM_STEPS);
    c.paths = 20;
    c.levels = 2;
    c.final_tol = 1e-12;
    vec![c]
}

/// Configs of a named preset with overrides applied.
pub fn preset_configs(name: &str, overrides: &Overrides) -> Result<Vec<ExperimentConfig>> {
    let mut cfgs = match name {
        "theorem_66" => theorem_66(),
        "theorem_69" => theorem_69(),
        "prop_64" => prop_64(),
        "section2" => section2(),
        "orthogonality" => orthogonality(),
        "time_reversal" => time_reversal(),
        "identities" => identities(),
        other => {
            return Err(Error::Config(format!(
                "unknown preset {other:?}; expected one of {}",
                PRESETS.join(", ")
            )))
        }
    };
    for c in &mut cfgs {
        overrides.apply(c);
        c.validate()?;
    }
    Ok(cfgs)
}

/// Runs every config in order and merges the results.
pub fn run_configs(name: &str, cfgs: &[ExperimentConfig], jobs: Option<usize>) -> Result<ExperimentResult> {
    let parts = cfgs.iter().map(|c| run_experiment(c, jobs)).collect::<Result<Vec<_>>>()?;
    Ok(ExperimentResult::merge(name, parts))
}

pub fn run_preset(name: &str, overrides: &Overrides, jobs: Option<usize>) -> Result<ExperimentResult> {
    run_configs(name, &preset_configs(name, overrides)?, jobs)
}

pub fn preset_theorem_66(overrides: &Overrides, jobs: Option<usize>) -> Result<ExperimentResult> {
    run_preset("theorem_66", overrides, jobs)
}

pub fn preset_theorem_69(overrides: &Overrides, jobs: Option<usize>) -> Result<ExperimentResult> {
    run_preset("theorem_69", overrides, jobs)
}

pub fn preset_prop_64(overrides: &Overrides, jobs: Option<usize>) -> Result<ExperimentResult> {
    run_preset("prop_64", overrides, jobs)
}

pub fn preset_section2(overrides: &Overrides, jobs: Option<usize>) -> Result<ExperimentResult> {
    run_preset("section2", overrides, jobs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_valid_and_ids_unique() {
        for name in PRESETS {
            let cfgs = preset_configs(name, &Overrides::default()).unwrap();
            let mut ids: Vec<_> = cfgs.iter().map(|c| c.id.clone()).collect();
            ids.sort();
            ids.dedup();
            assert_eq!(ids.len(), cfgs.len(), "{name}");
        }
        assert!(preset_configs("nope", &Overrides::default()).is_err());
    }

    #[test]
    fn overrides_reach_every_config() {
        let o = Overrides {
            paths: Some(3),
            levels: Some(4),
            ..Default::default()
        };
        assert!(preset_configs("section2", &o).unwrap().iter().all(|c| c.paths == 3 && c.levels == 4));
        let too_fine = Overrides {
            steps: Some(1 << 14),
            ..Default::default()
        };
        assert!(preset_configs("prop_64", &too_fine).is_err());
    }
}
