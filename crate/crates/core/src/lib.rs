//! Fusing a randomized trial with a confounded observational study through a
//! rank-2 multi-task Gaussian process, for conditional average treatment
//! effect (CATE) estimation with calibrated uncertainty.
//!
//! The experimental and observational response surfaces of each treatment
//! arm are modelled jointly; a single borrowing parameter `ρ ∈ [0, 1]`
//! controls how much the observational study informs the trial surface.
//! The posterior variance of the trial surface never drops below
//! `(1 − ρ²)` times its trial-only value, however large the observational
//! sample.
//!
//! Module map:
//!
//! - [`kernels`]: RBF and Matérn covariance functions.
//! - [`gp`]: single-task GP regression and hyperparameter search.
//! - [`icm`]: the joint two-task model and its posteriors.
//! - [`tuning`]: cross-validated choice of `ρ`.
//! - [`cate`]: the two-arm CATE estimator and baselines.
//! - [`simgen`]: seeded simulation scenarios with known ground truth.
//! - [`harness`]: replicated benchmarks, coverage and runtime tables.
//! - [`io`]: CSV files for datasets and predictions.
//! - [`cli`]: the `causal-icm` command-line front end.

pub mod cate;
pub mod cli;
pub mod data;
pub mod error;
pub mod gp;
pub mod harness;
pub mod icm;
pub mod io;
pub mod kernels;
pub mod linalg;
pub mod optim;
pub mod simgen;
pub mod tuning;

pub use data::{Covariates, Dataset, Samples, Study};
pub use error::{Error, Result};
pub use kernels::{KernelFamily, KernelSpec};
