//! Preprocessing and experimental-design toolkit for spectrometry-based
//! omics data.
//!
//! The crate covers four connected jobs:
//!
//! * [`matrix`] — the feature-matrix data model with CSV ingestion,
//!   synthetic spectrum generation and per-sample summaries.
//! * [`transforms`] — log-shift, scalings and normalizations as
//!   composable pipeline steps, including the closure-bias demonstration
//!   of why total-sum normalization manufactures negative correlations.
//! * [`design`] — blocked randomization of samples to plates and
//!   confounding diagnostics for existing assignments.
//! * [`lmm`] and [`powersim`] — a random-intercept mixed model fit by
//!   ML/REML and a Monte Carlo power engine comparing single-plate,
//!   blocked, confounded and as-available plate designs.
//!
//! All stochastic operations consume an explicit seed and derive
//! per-work-unit streams from it ([`rng`]), so results are reproducible
//! bit for bit, including under the parallel execution path enabled by
//! the default `parallel` feature.
//!
//! ```
//! use omicsprep::powersim::{analytic_power_ols, run_power, Scenario, SimGrid};
//!
//! let grid = SimGrid {
//!     effect_sizes: vec![0.75],
//!     sigma_b_values: vec![1.8],
//!     n_reps: 200,
//!     seed: 7,
//!     ..SimGrid::default()
//! };
//! let curves = run_power(&Scenario::single_plate(), &grid).unwrap();
//! let oracle = analytic_power_ols(0.75, 97, 191, 1.8, 0.05).unwrap();
//! assert!((curves[0].points[0].power - oracle).abs() < 0.1);
//! ```

pub mod design;
pub mod error;
pub mod lmm;
pub mod matrix;
pub mod powersim;
pub mod rng;
pub mod stats;
pub mod transforms;

pub use error::{Error, Result};
