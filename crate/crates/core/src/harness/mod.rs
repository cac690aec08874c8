//! Monte Carlo experiments, verdicts, presets and result persistence.

pub mod config;
pub mod experiment;
pub mod presets;
pub mod report_io;
pub mod stats;

pub use config::{DriverSpec, ExperimentConfig, IntegrandSpec, Overrides, Perturbation, ScalarFn, Scenario, ZFn};
pub use experiment::{run_experiment, ConvergenceReport, ExperimentResult};
pub use presets::{run_preset, PRESETS};
pub use report_io::{read_result, render_summary, write_result};
pub use stats::{Expect, Rule};
