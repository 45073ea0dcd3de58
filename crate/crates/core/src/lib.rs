//! Confidence intervals centered on bootstrap smoothed estimators after a
//! preliminary test in the normal linear model with known error variance.
//!
//! - [`gauss`]: normal distribution functions and shifted-normal quadrature.
//! - [`kernel`]: the smoothing kernel `k`, its derivative `q`, and the
//!   standard deviation ratio `r`.
//! - [`intervals`]: interval construction, coverage, minimum coverage and
//!   scaled expected length.
//! - [`linmod`]: least squares summaries of a linear model.
//! - [`mc`]: seeded Monte Carlo checks of the exact formulas.
//! - [`cli`]: the `bagged-ci` command line.

pub mod cli;
pub mod error;
pub mod gauss;
pub mod intervals;
pub mod kernel;
pub mod linmod;
pub mod mc;

pub use error::{Error, Result};
pub use intervals::{IntervalReport, IntervalRule, Quantity, Scenario};
pub use kernel::{FittedModel, PretestSpec};
