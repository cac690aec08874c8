//! Stochastic calculus via regularization on discrete grids, and its
//! connection to controlled rough paths.
//!
//! The crate evaluates regularized integrals and brackets of sampled paths,
//! builds second-order enhancements, forms controlled pairs and their
//! regularized rough integrals, and runs Monte Carlo experiments that check
//! the limits as the regularization width shrinks.

pub mod controlled;
pub mod enhance;
pub mod error;
pub mod harness;
pub mod generate;
pub mod linalg;
pub mod path;
pub mod regcalc;
pub mod roughint;

pub use controlled::{pair_gradient, pair_integrand, pair_zero, ControlledPair, PairLabel};
pub use enhance::{enhance, EnhancedPath, Flavor, SecondOrder};
pub use error::{Error, Result};
pub use generate::{gen_bm, gen_fbm, gen_semimartingale, FbmGenerator, Seed};
pub use linalg::Matrix;
pub use path::{Grid, GridPath, MatrixPath};
pub use regcalc::EpsSchedule;
pub use roughint::{rough_integral_backward, rough_integral_reg, sewing_integral, time_reversal_check, Germ};
