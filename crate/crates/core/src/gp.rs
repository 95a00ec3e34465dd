//! Single-task GP regression and marginal-likelihood hyperparameter search.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::data::{Covariates, Samples};
use crate::error::{dim_check, Error, Result};
use crate::icm::coregionalization_matrix;
use crate::kernels::{kernel_matrix, KernelFamily, KernelSpec, PairwiseCache};
use crate::linalg::{dot, Cholesky};
use crate::optim::NelderMead;

/// Posterior variances can come out a hair below zero from cancellation.
pub(crate) fn clamp_variance(v: f64) -> f64 {
    v.max(0.0)
}

/// Fitted GP with `y = f(x) + ε`, `f ~ GP(0, k)`, `ε ~ N(0, σ²)`.
#[derive(Clone, Debug)]
pub struct GpModel {
    kernel: KernelSpec,
    noise_variance: f64,
    train: Samples,
    chol: Cholesky,
    alpha: Vec<f64>,
}

impl GpModel {
    pub fn fit(train: Samples, kernel: KernelSpec, noise_variance: f64) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::Validation("GP needs at least one training point".into()));
        }
        validate_noise(noise_variance)?;
        dim_check("training covariate columns", kernel.dim(), train.dim())?;
        let mut k = kernel_matrix(&kernel, &train.x, &train.x)?;
        for i in 0..train.len() {
            k[(i, i)] += noise_variance;
        }
        let chol = Cholesky::factor(k)?;
        let alpha = chol.solve(&train.y);
        Ok(Self { kernel, noise_variance, train, chol, alpha })
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    pub fn train(&self) -> &Samples {
        &self.train
    }

    /// `(K + σ²I)⁻¹ y`.
    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn cholesky(&self) -> &Cholesky {
        &self.chol
    }

    /// Posterior means and variances of `f` at each row of `xs`.
    pub fn posterior(&self, xs: &Covariates) -> Result<(Vec<f64>, Vec<f64>)> {
        if xs.nrows() > 0 {
            dim_check("test covariate columns", self.kernel.dim(), xs.ncols())?;
        }
        let cross = kernel_matrix(&self.kernel, &self.train.x, xs)?;
        let means = (0..xs.nrows())
            .map(|j| (0..self.train.len()).map(|i| cross[(i, j)] * self.alpha[i]).sum())
            .collect();
        let v = self.chol.forward_mat(cross);
        let vars = (0..xs.nrows())
            .map(|j| {
                let q: f64 = (0..v.nrows()).map(|i| v[(i, j)] * v[(i, j)]).sum();
                clamp_variance(self.kernel.variance() - q)
            })
            .collect();
        Ok((means, vars))
    }

    pub fn log_marginal_likelihood(&self) -> f64 {
        gaussian_lml(&self.chol, &self.train.y, &self.alpha)
    }
}

pub fn gp_fit(x: Covariates, y: Vec<f64>, kernel: KernelSpec, noise_variance: f64) -> Result<GpModel> {
    GpModel::fit(Samples::new(x, y)?, kernel, noise_variance)
}

pub fn gp_posterior(model: &GpModel, xs: &Covariates) -> Result<(Vec<f64>, Vec<f64>)> {
    model.posterior(xs)
}

pub fn log_marginal_likelihood(model: &GpModel) -> f64 {
    model.log_marginal_likelihood()
}

pub(crate) fn validate_noise(noise_variance: f64) -> Result<()> {
    if noise_variance.is_finite() && noise_variance > 0.0 {
        Ok(())
    } else {
        Err(Error::Validation(format!("noise variance must be positive, got {noise_variance}")))
    }
}

/// `log N(y | 0, Σ)` given the factor of `Σ` and `Σ⁻¹ y`.
pub(crate) fn gaussian_lml(chol: &Cholesky, y: &[f64], alpha: &[f64]) -> f64 {
    let n = y.len() as f64;
    -0.5 * dot(y, alpha) - chol.half_log_det() - 0.5 * n * (2.0 * PI).ln()
}

/// Kernel hyperparameters plus the shared observation noise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hyperparameters {
    pub kernel: KernelSpec,
    pub noise_variance: f64,
}

/// Which marginal likelihood to maximize.
#[derive(Clone, Copy, Debug)]
pub enum HyperObjective<'a> {
    SingleTask(&'a Samples),
    /// Joint likelihood of the two-task model at a fixed `rho`.
    Icm { experimental: &'a Samples, observational: &'a Samples, rho: f64 },
}

#[derive(Clone, Debug)]
pub struct HyperOptions {
    /// Number of starting points, taken in order from scales `1, 0.1, 10`
    /// applied to the default hyperparameters.
    pub restarts: usize,
    pub nelder_mead: NelderMead,
}

impl Default for HyperOptions {
    fn default() -> Self {
        Self { restarts: 3, nelder_mead: NelderMead::default() }
    }
}

/// Result of a hyperparameter search.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HyperFit {
    pub hyperparameters: Hyperparameters,
    pub lml: f64,
    /// LML at each restart's starting point (`-inf` when it failed to factor).
    pub start_lmls: Vec<f64>,
    pub evaluations: usize,
}

impl HyperFit {
    /// `true` when the returned LML is at least as good as every start.
    pub fn improved_on_starts(&self) -> bool {
        self.start_lmls.iter().all(|&s| self.lml >= s)
    }
}

pub const LOG_BOUND: f64 = 6.0;
pub const MIN_NOISE_VARIANCE: f64 = 1e-6;
const RESTART_SCALES: [f64; 3] = [1.0, 0.1, 10.0];

/// Maximizes the log marginal likelihood over log-lengthscales, log signal
/// variance and log noise variance with restarted Nelder–Mead.
pub fn optimize_hyperparameters(
    objective: HyperObjective<'_>,
    family: KernelFamily,
    options: &HyperOptions,
) -> Result<HyperFit> {
    let (x, y, tasks, coef) = match objective {
        HyperObjective::SingleTask(s) => (s.x.clone(), s.y.clone(), vec![0u8; s.len()], [[1.0, 0.0], [0.0, 0.0]]),
        HyperObjective::Icm { experimental, observational, rho } => {
            let b = coregionalization_matrix(rho)?;
            let pooled = experimental.concat(observational)?;
            let mut tasks = vec![0u8; experimental.len()];
            tasks.resize(pooled.len(), 1);
            (pooled.x, pooled.y, tasks, b.blocks())
        }
    };
    let n = y.len();
    if n < 2 {
        return Err(Error::Validation(format!("hyperparameter search needs at least 2 points, got {n}")));
    }
    if options.restarts == 0 || options.restarts > RESTART_SCALES.len() {
        return Err(Error::Validation(format!("restarts must be in 1..=3, got {}", options.restarts)));
    }
    let p = x.ncols();
    let cache = PairwiseCache::new(&x, tasks);

    let lml_at = |theta: &[f64]| -> Option<f64> {
        let (kernel, noise) = unpack(family, theta).ok()?;
        let sigma = cache.covariance(&kernel, coef, noise, false);
        let chol = Cholesky::factor(sigma).ok()?;
        let mut z = y.clone();
        chol.forward_in_place(&mut z);
        Some(-0.5 * dot(&z, &z) - chol.half_log_det() - 0.5 * n as f64 * (2.0 * PI).ln())
    };

    let defaults = default_hyperparameters(&x, &y);
    let mut bounds = vec![(-LOG_BOUND, LOG_BOUND); p + 1];
    bounds.push((MIN_NOISE_VARIANCE.ln(), LOG_BOUND));

    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut start_lmls = Vec::with_capacity(options.restarts);
    let mut evaluations = 0;
    for scale in &RESTART_SCALES[..options.restarts] {
        let start: Vec<f64> = defaults.iter().map(|d| (d * scale).ln()).collect();
        let m = options.nelder_mead.minimize(|t| lml_at(t).map_or(f64::INFINITY, |v| -v), &start, &bounds);
        evaluations += m.evaluations;
        start_lmls.push(-m.start_value);
        if m.value.is_finite() && best.as_ref().is_none_or(|(_, v)| -m.value > *v) {
            best = Some((m.point, -m.value));
        }
    }
    let (theta, lml) = best.ok_or_else(|| {
        Error::Numerical(format!("covariance factorization failed at every one of {} restarts", options.restarts))
    })?;
    let (kernel, noise_variance) = unpack(family, &theta)?;
    Ok(HyperFit { hyperparameters: Hyperparameters { kernel, noise_variance }, lml, start_lmls, evaluations })
}

/// Natural-scale defaults `[ℓ_1..ℓ_p, variance, noise]`: column standard
/// deviations, outcome variance, and a tenth of the outcome variance.
fn default_hyperparameters(x: &Covariates, y: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = (0..x.ncols())
        .map(|d| {
            let sd = std_dev(&x.column(d));
            if sd > 1e-12 { sd } else { 1.0 }
        })
        .collect();
    let v = std_dev(y).powi(2);
    let v = if v > 1e-12 { v } else { 1.0 };
    out.push(v);
    out.push(0.1 * v);
    out
}

fn unpack(family: KernelFamily, theta: &[f64]) -> Result<(KernelSpec, f64)> {
    let p = theta.len() - 2;
    let kernel = KernelSpec::new(family, theta[..p].iter().map(|t| t.exp()).collect(), theta[p].exp())?;
    Ok((kernel, theta[p + 1].exp()))
}

pub(crate) fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Population standard deviation.
pub(crate) fn std_dev(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len().max(1) as f64).sqrt()
}
