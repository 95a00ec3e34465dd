//! Rank-2 intrinsic coregionalization model over an experimental task `f^e`
//! and an observational task `f^o`.
//!
//! Both tasks are mixtures of two independent draws `u₁, u₂ ~ GP(0, k)`:
//!
//! ```text
//! f^e = u₁,    f^o = ρ·u₁ + √(1−ρ²)·u₂
//! ```
//!
//! so the task covariance is `B ⊗ k` with `B = [[1, ρ], [ρ, 1]]`. Setting
//! `ρ = 0` decouples the studies; `ρ = 1` pools them into a single function.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::data::{Covariates, Samples};
use crate::error::{dim_check, Error, Result};
use crate::gp::{clamp_variance, gaussian_lml, validate_noise};
use crate::kernels::{KernelSpec, PairwiseCache};
use crate::linalg::{dot, Cholesky};

/// Symmetric 2×2 task covariance `[[b_e, b_eo], [b_eo, b_o]]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoregMatrix {
    pub b_e: f64,
    pub b_o: f64,
    pub b_eo: f64,
    pub rho: f64,
}

/// `B` under the borrowing parameterization: `b_e = b_o = 1`, `b_eo = ρ`.
pub fn coregionalization_matrix(rho: f64) -> Result<CoregMatrix> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::Validation(format!("rho must lie in [0, 1], got {rho}")));
    }
    Ok(CoregMatrix { b_e: 1.0, b_o: 1.0, b_eo: rho, rho })
}

impl CoregMatrix {
    /// `B = A Aᵀ` from the mixing coefficients `A = [[a₁ᵉ, a₂ᵉ], [a₁ᵒ, a₂ᵒ]]`.
    pub fn from_mixing(a: [[f64; 2]; 2]) -> Self {
        let b_e = a[0][0] * a[0][0] + a[0][1] * a[0][1];
        let b_o = a[1][0] * a[1][0] + a[1][1] * a[1][1];
        let b_eo = a[0][0] * a[1][0] + a[0][1] * a[1][1];
        Self { b_e, b_o, b_eo, rho: b_eo / (b_e * b_o).sqrt() }
    }

    /// Mixing coefficients that generate this parameterization.
    pub fn mixing(rho: f64) -> [[f64; 2]; 2] {
        [[1.0, 0.0], [rho, (1.0 - rho * rho).max(0.0).sqrt()]]
    }

    pub fn det(&self) -> f64 {
        self.b_e * self.b_o - self.b_eo * self.b_eo
    }

    pub(crate) fn blocks(&self) -> [[f64; 2]; 2] {
        [[self.b_e, self.b_eo], [self.b_eo, self.b_o]]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Task {
    /// `f^e`, the trial response surface.
    Experimental,
    /// `f^o`, the observational response surface.
    Observational,
    /// `η = f^e − f^o`.
    Confounding,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TaskPosterior {
    pub mean: f64,
    pub variance: f64,
    pub task: Task,
}

/// Bivariate posterior of `(f^e(x), f^o(x))` at one input.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JointPosterior {
    pub mean: [f64; 2],
    pub cov: [[f64; 2]; 2],
}

impl JointPosterior {
    pub fn task(&self, task: Task) -> TaskPosterior {
        let (mean, variance) = match task {
            Task::Experimental => (self.mean[0], self.cov[0][0]),
            Task::Observational => (self.mean[1], self.cov[1][1]),
            Task::Confounding => (
                self.mean[0] - self.mean[1],
                self.cov[0][0] + self.cov[1][1] - 2.0 * self.cov[0][1],
            ),
        };
        TaskPosterior { mean, variance: clamp_variance(variance), task }
    }
}

/// Joint model for one treatment arm.
#[derive(Clone, Debug)]
pub struct IcmModel {
    coreg: CoregMatrix,
    kernel: KernelSpec,
    noise_variance: f64,
    experimental: Samples,
    observational: Samples,
    pooled_x: Covariates,
    y: Vec<f64>,
    chol: Cholesky,
    alpha: Vec<f64>,
}

/// Serializable description of a fitted [`IcmModel`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IcmSummary {
    pub rho: f64,
    pub kernel: KernelSpec,
    pub noise_variance: f64,
    pub log_marginal_likelihood: f64,
    pub n_experimental: usize,
    pub n_observational: usize,
}

/// `Σ = K(X, X) + σ²I` with the two-by-two block structure
/// `[[b_e K_ee, b_eo K_eo], [b_eo K_oe, b_o K_oo]]`.
pub fn joint_covariance(
    experimental: &Covariates,
    observational: &Covariates,
    coreg: &CoregMatrix,
    kernel: &KernelSpec,
    noise_variance: f64,
) -> Result<Mat<f64>> {
    let pooled = experimental.vstack(observational)?;
    if pooled.nrows() > 0 {
        dim_check("covariate columns", kernel.dim(), pooled.ncols())?;
    }
    let mut tasks = vec![0u8; experimental.nrows()];
    tasks.resize(pooled.nrows(), 1);
    Ok(PairwiseCache::new(&pooled, tasks).covariance(kernel, coreg.blocks(), noise_variance, true))
}

pub fn icm_fit(
    experimental: Samples,
    observational: Samples,
    rho: f64,
    kernel: KernelSpec,
    noise_variance: f64,
) -> Result<IcmModel> {
    if experimental.is_empty() && observational.is_empty() {
        return Err(Error::Validation("joint model needs at least one observation".into()));
    }
    IcmModel::build(experimental, observational, coregionalization_matrix(rho)?, kernel, noise_variance)
}

impl IcmModel {
    /// Like [`icm_fit`] but also accepts two empty studies (the prior).
    pub(crate) fn build(
        experimental: Samples,
        observational: Samples,
        coreg: CoregMatrix,
        kernel: KernelSpec,
        noise_variance: f64,
    ) -> Result<Self> {
        validate_noise(noise_variance)?;
        for s in [&experimental, &observational] {
            if !s.is_empty() {
                dim_check("covariate columns", kernel.dim(), s.dim())?;
            }
        }
        let sigma = joint_covariance(&experimental.x, &observational.x, &coreg, &kernel, noise_variance)?;
        let chol = Cholesky::factor(sigma)?;
        let pooled = experimental.concat(&observational)?;
        let alpha = chol.solve(&pooled.y);
        Ok(Self {
            coreg,
            kernel,
            noise_variance,
            experimental,
            observational,
            pooled_x: pooled.x,
            y: pooled.y,
            chol,
            alpha,
        })
    }

    pub fn rho(&self) -> f64 {
        self.coreg.rho
    }

    pub fn coreg(&self) -> &CoregMatrix {
        &self.coreg
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    pub fn experimental(&self) -> &Samples {
        &self.experimental
    }

    pub fn observational(&self) -> &Samples {
        &self.observational
    }

    pub fn cholesky(&self) -> &Cholesky {
        &self.chol
    }

    /// `Σ⁻¹ y` for the concatenated outcomes `(yᵉ, yᵒ)`.
    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    fn n_e(&self) -> usize {
        self.experimental.len()
    }

    /// Cross-covariance rows `[b_e k(x, Xᵉ), b_eo k(x, Xᵒ)]` and
    /// `[b_eo k(x, Xᵉ), b_o k(x, Xᵒ)]`.
    fn cross_rows(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.pooled_x.nrows();
        let ne = self.n_e();
        let mut ce = Vec::with_capacity(n);
        let mut co = Vec::with_capacity(n);
        for i in 0..n {
            let k = self.kernel.eval_unchecked(x, self.pooled_x.row(i));
            if i < ne {
                ce.push(self.coreg.b_e * k);
                co.push(self.coreg.b_eo * k);
            } else {
                ce.push(self.coreg.b_eo * k);
                co.push(self.coreg.b_o * k);
            }
        }
        (ce, co)
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        dim_check("test point dimension", self.kernel.dim(), x.len())
    }

    /// Posterior of `(f^e(x), f^o(x))`, including their cross-covariance.
    pub fn joint_posterior(&self, x: &[f64]) -> Result<JointPosterior> {
        self.check_point(x)?;
        let (mut ce, mut co) = self.cross_rows(x);
        let mean = [dot(&ce, &self.alpha), dot(&co, &self.alpha)];
        self.chol.forward_in_place(&mut ce);
        self.chol.forward_in_place(&mut co);
        let kxx = self.kernel.variance();
        let b = self.coreg.blocks();
        let cov = [
            [b[0][0] * kxx - dot(&ce, &ce), b[0][1] * kxx - dot(&ce, &co)],
            [b[1][0] * kxx - dot(&co, &ce), b[1][1] * kxx - dot(&co, &co)],
        ];
        Ok(JointPosterior { mean, cov })
    }

    /// Joint posteriors at every row of `xs`, sharing one blocked solve.
    pub fn joint_posteriors(&self, xs: &Covariates) -> Result<Vec<JointPosterior>> {
        if xs.nrows() == 0 {
            return Ok(Vec::new());
        }
        dim_check("test covariate columns", self.kernel.dim(), xs.ncols())?;
        let n = self.pooled_x.nrows();
        let m = xs.nrows();
        let mut cross = Mat::<f64>::zeros(n, 2 * m);
        let mut means = Vec::with_capacity(m);
        for j in 0..m {
            let (ce, co) = self.cross_rows(xs.row(j));
            means.push([dot(&ce, &self.alpha), dot(&co, &self.alpha)]);
            for i in 0..n {
                cross[(i, 2 * j)] = ce[i];
                cross[(i, 2 * j + 1)] = co[i];
            }
        }
        let v = self.chol.forward_mat(cross);
        let kxx = self.kernel.variance();
        let b = self.coreg.blocks();
        Ok((0..m)
            .map(|j| {
                let (mut ee, mut eo, mut oo) = (0.0, 0.0, 0.0);
                for i in 0..n {
                    let (a, c) = (v[(i, 2 * j)], v[(i, 2 * j + 1)]);
                    ee += a * a;
                    eo += a * c;
                    oo += c * c;
                }
                JointPosterior {
                    mean: means[j],
                    cov: [[b[0][0] * kxx - ee, b[0][1] * kxx - eo], [b[1][0] * kxx - eo, b[1][1] * kxx - oo]],
                }
            })
            .collect())
    }

    pub fn posterior(&self, x: &[f64], task: Task) -> Result<TaskPosterior> {
        Ok(self.joint_posterior(x)?.task(task))
    }

    pub fn posterior_eta(&self, x: &[f64]) -> Result<TaskPosterior> {
        self.posterior(x, Task::Confounding)
    }

    pub fn posteriors(&self, xs: &Covariates, task: Task) -> Result<Vec<TaskPosterior>> {
        Ok(self.joint_posteriors(xs)?.into_iter().map(|j| j.task(task)).collect())
    }

    /// Posterior means of `f^e` only; no variance solves.
    pub fn experimental_means(&self, xs: &Covariates) -> Result<Vec<f64>> {
        if xs.nrows() > 0 {
            dim_check("test covariate columns", self.kernel.dim(), xs.ncols())?;
        }
        Ok(xs.rows().map(|x| dot(&self.cross_rows(x).0, &self.alpha)).collect())
    }

    pub fn log_marginal_likelihood(&self) -> f64 {
        gaussian_lml(&self.chol, &self.y, &self.alpha)
    }

    pub fn summary(&self) -> IcmSummary {
        IcmSummary {
            rho: self.rho(),
            kernel: self.kernel.clone(),
            noise_variance: self.noise_variance,
            log_marginal_likelihood: self.log_marginal_likelihood(),
            n_experimental: self.experimental.len(),
            n_observational: self.observational.len(),
        }
    }
}

/// Marginal posterior of one task (`Experimental` or `Observational`; use
/// [`icm_posterior_eta`] for the confounding function).
pub fn icm_posterior(model: &IcmModel, x: &[f64], task: Task) -> Result<TaskPosterior> {
    model.posterior(x, task)
}

pub fn icm_posterior_eta(model: &IcmModel, x: &[f64]) -> Result<TaskPosterior> {
    model.posterior_eta(x)
}

pub fn icm_log_marginal_likelihood(model: &IcmModel) -> f64 {
    model.log_marginal_likelihood()
}

/// Posterior variance of `f^e` with and without the observational study.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VarianceBoundRecord {
    pub v_full: f64,
    pub v_rct_only: f64,
    /// `(1 − ρ²)·v_rct_only`.
    pub lower: f64,
    pub holds_lower: bool,
    pub holds_upper: bool,
}

const BOUND_SLACK: f64 = 1e-10;

/// Checks `(1−ρ²)·V_{De} ≤ V ≤ V_{De}` at each test point.
pub fn variance_bound_report(
    experimental: &Samples,
    observational: &Samples,
    rho: f64,
    kernel: &KernelSpec,
    noise_variance: f64,
    xs: &Covariates,
) -> Result<Vec<VarianceBoundRecord>> {
    let coreg = coregionalization_matrix(rho)?;
    let full = IcmModel::build(experimental.clone(), observational.clone(), coreg, kernel.clone(), noise_variance)?;
    let rct = IcmModel::build(
        experimental.clone(),
        Samples::empty(kernel.dim()),
        coreg,
        kernel.clone(),
        noise_variance,
    )?;
    let v_full = full.posteriors(xs, Task::Experimental)?;
    let v_rct = rct.posteriors(xs, Task::Experimental)?;
    Ok(v_full
        .iter()
        .zip(&v_rct)
        .map(|(f, r)| {
            let lower = (1.0 - rho * rho) * r.variance;
            VarianceBoundRecord {
                v_full: f.variance,
                v_rct_only: r.variance,
                lower,
                holds_lower: f.variance >= lower - BOUND_SLACK,
                holds_upper: f.variance <= r.variance + BOUND_SLACK,
            }
        })
        .collect())
}
