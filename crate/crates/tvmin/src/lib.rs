//! Total variation minimization for gradient-sparse signals.
//!
//! The crate recovers piecewise-constant signals and images from few random
//! linear measurements by minimizing the total variation seminorm, and
//! ships the analysis tools that explain when that works: exact null-space
//! recovery certificates for small instances, Monte-Carlo and closed-form
//! estimates of the Gaussian widths that govern the required number of
//! measurements, dyadic averaging pyramids, robustness bounds for noisy
//! data, and reproducible phase-transition experiments.
//!
//! Entry points:
//! - [`solver::tv_min_eq`] / [`solver::tv_min_noise`] — recovery programs;
//! - [`certify::null_space_condition`] — exhaustive recovery certificate;
//! - [`width::width_mc`] and the closed-form bounds in [`width`];
//! - [`experiment::run_phase_transition`] — seeded success-rate grids.

#![forbid(unsafe_code)]

pub mod certify;
pub mod ensemble;
pub mod error;
pub mod experiment;
pub mod haar;
mod linalg;
mod lp;
pub mod operators;
pub mod seed;
pub mod signal;
pub mod solver;
pub mod width;

pub use error::{Error, Result};
pub use seed::SeedSpec;
pub use signal::{sparse_gradient_image, sparse_gradient_signal, MultiSignal, Signal};
