//! CATE estimators: the two-arm Causal-ICM T-learner and the in-repo
//! comparators (single-study GP T-learners and experimental grounding).
//!
//! All estimators work on covariates standardized by a shared
//! [`Preprocessing`] and on outcomes centered per arm, so different methods
//! fitted with the same preprocessing and hyperparameters are directly
//! comparable.

use faer::Mat;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::data::{Covariates, Dataset, Samples};
use crate::error::{dim_check, Error, Result};
use crate::gp::{mean, optimize_hyperparameters, std_dev, GpModel, HyperFit, HyperObjective, HyperOptions, Hyperparameters};
use crate::icm::{coregionalization_matrix, icm_fit, IcmModel, Task};
use crate::kernels::KernelFamily;
use crate::linalg::{dot, solve_spd_with_ridge};
use crate::tuning::{
    default_rho_grid, fit_study_propensity, propensity_weights, select_rho, tune_rho_weighted, OptimizerLog,
    RhoSelection, TuneOptions, TuningMode,
};

/// Posterior summary of `τ(x)` at one test point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CatePosterior {
    pub mean: f64,
    pub variance: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub level: f64,
}

/// Two-sided Gaussian quantile `z_{(1+level)/2}`.
pub fn z_quantile(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Validation(format!("credible level must lie in (0, 1), got {level}")));
    }
    Ok(Normal::standard().inverse_cdf(0.5 * (1.0 + level)))
}

impl CatePosterior {
    pub fn from_moments(mean: f64, variance: f64, level: f64) -> Result<Self> {
        let half = z_quantile(level)? * variance.max(0.0).sqrt();
        Ok(Self { mean, variance: variance.max(0.0), ci_low: mean - half, ci_high: mean + half, level })
    }

    pub fn contains(&self, value: f64) -> bool {
        self.ci_low <= value && value <= self.ci_high
    }
}

/// Covariate standardization and per-arm outcome offsets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Preprocessing {
    pub x_mean: Vec<f64>,
    pub x_scale: Vec<f64>,
    /// Subtracted from outcomes of arm 0 and arm 1 before fitting.
    pub y_offset: [f64; 2],
}

impl Preprocessing {
    pub fn identity(dim: usize) -> Self {
        Self { x_mean: vec![0.0; dim], x_scale: vec![1.0; dim], y_offset: [0.0; 2] }
    }

    /// Statistics of the pooled units of `datasets`: column means and
    /// standard deviations, and the mean outcome of each arm.
    pub fn from_datasets(datasets: &[&Dataset]) -> Result<Self> {
        let first = datasets.first().ok_or_else(|| Error::Validation("no datasets to standardize".into()))?;
        let p = first.dim();
        let mut x = Covariates::empty(p);
        let mut ys: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
        for d in datasets {
            x = x.vstack(&d.x)?;
            for (y, &a) in d.y.iter().zip(&d.a) {
                ys[a as usize].push(*y);
            }
        }
        let x_scale = (0..p)
            .map(|j| {
                let s = std_dev(&x.column(j));
                if s > 1e-12 { s } else { 1.0 }
            })
            .collect();
        Ok(Self {
            x_mean: (0..p).map(|j| mean(&x.column(j))).collect(),
            x_scale,
            y_offset: [mean(&ys[0]), mean(&ys[1])],
        })
    }

    pub fn dim(&self) -> usize {
        self.x_mean.len()
    }

    pub fn transform(&self, xs: &Covariates) -> Result<Covariates> {
        dim_check("covariate columns", self.dim(), xs.ncols())?;
        Ok(xs.map_rows(|r, out| {
            for j in 0..r.len() {
                out[j] = (r[j] - self.x_mean[j]) / self.x_scale[j];
            }
        }))
    }

    /// Standardized covariates and centered outcomes of one arm.
    pub fn arm_samples(&self, data: &Dataset, arm: u8) -> Result<Samples> {
        let s = data.nonempty_arm(arm)?;
        let off = self.y_offset[arm as usize];
        Samples::new(self.transform(&s.x)?, s.y.iter().map(|y| y - off).collect())
    }
}

/// Registered estimator identifiers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    CausalIcm,
    GpExp,
    GpObs,
    ExperimentalGrounding,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::CausalIcm, Method::GpExp, Method::GpObs, Method::ExperimentalGrounding];

    pub fn id(self) -> &'static str {
        match self {
            Method::CausalIcm => "causal_icm",
            Method::GpExp => "gp_exp",
            Method::GpObs => "gp_obs",
            Method::ExperimentalGrounding => "experimental_grounding",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.id())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_lowercase().replace('-', "_");
        Method::ALL.into_iter().find(|m| m.id() == norm).ok_or_else(|| {
            Error::Validation(format!(
                "unknown method {s:?}; expected one of causal_icm, gp_exp, gp_obs, experimental_grounding"
            ))
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RhoChoice {
    Fixed(f64),
    Auto,
}

/// Settings shared by every estimator.
#[derive(Clone, Debug)]
pub struct CateOptions {
    pub family: KernelFamily,
    pub rho: RhoChoice,
    /// Drives fold assignment when `ρ` is tuned.
    pub seed: u64,
    pub tuning_mode: TuningMode,
    pub folds: usize,
    pub rho_grid: Vec<f64>,
    pub hyper: HyperOptions,
    /// Per-arm hyperparameters (standardized scale) used instead of
    /// likelihood maximization.
    pub fixed: Option<[Hyperparameters; 2]>,
    /// Defaults to statistics of all training units handed to the estimator.
    pub preprocessing: Option<Preprocessing>,
    /// Known trial randomization probability, used by experimental grounding.
    pub treatment_probability: f64,
}

impl Default for CateOptions {
    fn default() -> Self {
        Self {
            family: KernelFamily::Rbf,
            rho: RhoChoice::Auto,
            seed: 0,
            tuning_mode: TuningMode::Full,
            folds: 5,
            rho_grid: default_rho_grid(),
            hyper: HyperOptions::default(),
            fixed: None,
            preprocessing: None,
            treatment_probability: 0.5,
        }
    }
}

impl CateOptions {
    fn validate(&self) -> Result<()> {
        if let RhoChoice::Fixed(r) = self.rho {
            coregionalization_matrix(r)?;
        }
        if !(self.treatment_probability > 0.0 && self.treatment_probability < 1.0) {
            return Err(Error::Validation(format!(
                "treatment probability must lie in (0, 1), got {}",
                self.treatment_probability
            )));
        }
        Ok(())
    }

    fn tune_options(&self, arm: u8) -> TuneOptions {
        TuneOptions {
            grid: self.rho_grid.clone(),
            folds: self.folds,
            seed: self.seed.wrapping_add(arm as u64),
            family: self.family,
            mode: self.tuning_mode,
            hyper: self.hyper.clone(),
            fixed: self.fixed.as_ref().map(|h| h[arm as usize].clone()),
        }
    }

    fn preprocessing_for(&self, datasets: &[&Dataset]) -> Result<Preprocessing> {
        match &self.preprocessing {
            Some(p) => {
                dim_check("preprocessing dimension", datasets[0].dim(), p.dim())?;
                Ok(p.clone())
            }
            None => Preprocessing::from_datasets(datasets),
        }
    }
}

/// Hyperparameters and likelihood of one fitted arm model.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ArmReport {
    pub arm: u8,
    pub hyperparameters: Hyperparameters,
    pub log_marginal_likelihood: f64,
    pub n_experimental: usize,
    pub n_observational: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FitReport {
    pub method: Method,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_selection: Option<CateRhoSelection>,
    pub arms: Vec<ArmReport>,
    /// Linear bias coefficients `[intercept, x1..xp]` on the raw covariate scale.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bias_coefficients: Option<Vec<f64>>,
    pub preprocessing: Preprocessing,
    pub optimizer: OptimizerLog,
}

/// Common prediction interface.
pub trait CateEstimator: Send + Sync {
    fn method(&self) -> Method;

    /// Posterior means and variances of `τ` at raw-scale test covariates.
    fn tau_moments(&self, xs: &Covariates) -> Result<(Vec<f64>, Vec<f64>)>;

    fn report(&self) -> FitReport;

    fn optimizer_log(&self) -> OptimizerLog;

    fn predict(&self, xs: &Covariates, level: f64) -> Result<Vec<CatePosterior>> {
        z_quantile(level)?;
        let (m, v) = self.tau_moments(xs)?;
        m.into_iter().zip(v).map(|(m, v)| CatePosterior::from_moments(m, v, level)).collect()
    }
}

/// `ρ` chosen by the loss averaged over both arms.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CateRhoSelection {
    pub grid: Vec<f64>,
    pub losses: Vec<f64>,
    pub chosen_rho: f64,
    pub arms: [RhoSelection; 2],
}

/// Two independent joint models, one per arm, sharing `ρ`.
#[derive(Clone, Debug)]
pub struct CateModel {
    arms: [IcmModel; 2],
    rho: f64,
    preprocessing: Preprocessing,
    selection: Option<CateRhoSelection>,
    optimizer: OptimizerLog,
}

fn arm_cells(rct: &Dataset, obs: &Dataset, pre: &Preprocessing) -> Result<[(Samples, Samples); 2]> {
    dim_check("observational covariate columns", rct.dim(), obs.dim())?;
    Ok([
        (pre.arm_samples(rct, 0)?, pre.arm_samples(obs, 0)?),
        (pre.arm_samples(rct, 1)?, pre.arm_samples(obs, 1)?),
    ])
}

fn tune_cate_rho(
    rct: &Dataset,
    obs: &Dataset,
    cells: &[(Samples, Samples); 2],
    pre: &Preprocessing,
    opts: &CateOptions,
) -> Result<CateRhoSelection> {
    let propensity = fit_study_propensity(&pre.transform(&rct.x)?, &pre.transform(&obs.x)?)?;
    let tune = |arm: u8| {
        let (e, o) = &cells[arm as usize];
        tune_rho_weighted(e, o, &propensity_weights(&propensity, &e.x), &opts.tune_options(arm))
    };
    let (s0, s1) = rayon::join(|| tune(0), || tune(1));
    let (s0, s1) = (s0?, s1?);
    let losses: Vec<f64> = s0.losses.iter().zip(&s1.losses).map(|(a, b)| 0.5 * (a + b)).collect();
    Ok(CateRhoSelection {
        chosen_rho: select_rho(&opts.rho_grid, &losses),
        grid: opts.rho_grid.clone(),
        losses,
        arms: [s0, s1],
    })
}

fn resolve_hyper(
    objective: HyperObjective<'_>,
    arm: u8,
    opts: &CateOptions,
) -> Result<(Hyperparameters, Option<HyperFit>)> {
    match &opts.fixed {
        Some(h) => Ok((h[arm as usize].clone(), None)),
        None => {
            let fit = optimize_hyperparameters(objective, opts.family, &opts.hyper)?;
            Ok((fit.hyperparameters.clone(), Some(fit)))
        }
    }
}

/// Fits the two-arm Causal-ICM; every (study, arm) cell must be non-empty.
pub fn fit_causal_icm_cate(rct: &Dataset, obs: &Dataset, opts: &CateOptions) -> Result<CateModel> {
    opts.validate()?;
    let pre = opts.preprocessing_for(&[rct, obs])?;
    let cells = arm_cells(rct, obs, &pre)?;
    let mut log = OptimizerLog::default();
    let (rho, selection) = match opts.rho {
        RhoChoice::Fixed(r) => (r, None),
        RhoChoice::Auto => {
            let s = tune_cate_rho(rct, obs, &cells, &pre, opts)?;
            log.merge(s.arms[0].optimizer);
            log.merge(s.arms[1].optimizer);
            (s.chosen_rho, Some(s))
        }
    };
    let fit_arm = |arm: u8| -> Result<(IcmModel, Option<HyperFit>)> {
        let (e, o) = &cells[arm as usize];
        let (hp, fit) = resolve_hyper(HyperObjective::Icm { experimental: e, observational: o, rho }, arm, opts)?;
        Ok((icm_fit(e.clone(), o.clone(), rho, hp.kernel, hp.noise_variance)?, fit))
    };
    let (a0, a1) = rayon::join(|| fit_arm(0), || fit_arm(1));
    let ((m0, f0), (m1, f1)) = (a0?, a1?);
    for f in [f0, f1].iter().flatten() {
        log.record(f);
    }
    Ok(CateModel { arms: [m0, m1], rho, preprocessing: pre, selection, optimizer: log })
}

impl CateModel {
    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Joint model of arm `a` (fitted on standardized, centered data).
    pub fn arm(&self, arm: u8) -> &IcmModel {
        &self.arms[arm as usize]
    }

    pub fn preprocessing(&self) -> &Preprocessing {
        &self.preprocessing
    }

    pub fn rho_selection(&self) -> Option<&CateRhoSelection> {
        self.selection.as_ref()
    }

    /// Posterior of the hidden confounding `η_a` of one arm's outcome
    /// surface at raw-scale covariates.
    pub fn arm_confounding(&self, arm: u8, xs: &Covariates) -> Result<(Vec<f64>, Vec<f64>)> {
        let z = self.preprocessing.transform(xs)?;
        let post = self.arms[arm as usize].posteriors(&z, Task::Confounding)?;
        Ok(post.iter().map(|p| (p.mean, p.variance)).unzip())
    }
}

impl CateEstimator for CateModel {
    fn method(&self) -> Method {
        Method::CausalIcm
    }

    fn tau_moments(&self, xs: &Covariates) -> Result<(Vec<f64>, Vec<f64>)> {
        let z = self.preprocessing.transform(xs)?;
        let p0 = self.arms[0].posteriors(&z, Task::Experimental)?;
        let p1 = self.arms[1].posteriors(&z, Task::Experimental)?;
        let shift = self.preprocessing.y_offset[1] - self.preprocessing.y_offset[0];
        Ok(p0.iter().zip(&p1).map(|(a, b)| (b.mean - a.mean + shift, a.variance + b.variance)).unzip())
    }

    fn report(&self) -> FitReport {
        let arms = self
            .arms
            .iter()
            .enumerate()
            .map(|(a, m)| ArmReport {
                arm: a as u8,
                hyperparameters: Hyperparameters { kernel: m.kernel().clone(), noise_variance: m.noise_variance() },
                log_marginal_likelihood: m.log_marginal_likelihood(),
                n_experimental: m.experimental().len(),
                n_observational: m.observational().len(),
            })
            .collect();
        FitReport {
            method: Method::CausalIcm,
            rho: Some(self.rho),
            rho_selection: self.selection.clone(),
            arms,
            bias_coefficients: None,
            preprocessing: self.preprocessing.clone(),
            optimizer: self.optimizer,
        }
    }

    fn optimizer_log(&self) -> OptimizerLog {
        self.optimizer
    }
}

/// `τ̂` posterior at raw-scale covariates.
pub fn predict_cate(model: &CateModel, xs: &Covariates, level: f64) -> Result<Vec<CatePosterior>> {
    model.predict(xs, level)
}

/// Two independent single-task GPs on one study.
#[derive(Clone, Debug)]
pub struct TLearnerGp {
    arms: [GpModel; 2],
    preprocessing: Preprocessing,
    method: Method,
    optimizer: OptimizerLog,
}

fn fit_tlearner_with(data: &Dataset, pre: Preprocessing, opts: &CateOptions, method: Method) -> Result<TLearnerGp> {
    let cells = [pre.arm_samples(data, 0)?, pre.arm_samples(data, 1)?];
    let fit_arm = |arm: u8| -> Result<(GpModel, Option<HyperFit>)> {
        let s = &cells[arm as usize];
        let (hp, fit) = resolve_hyper(HyperObjective::SingleTask(s), arm, opts)?;
        Ok((GpModel::fit(s.clone(), hp.kernel, hp.noise_variance)?, fit))
    };
    let (a0, a1) = rayon::join(|| fit_arm(0), || fit_arm(1));
    let ((m0, f0), (m1, f1)) = (a0?, a1?);
    let mut log = OptimizerLog::default();
    for f in [f0, f1].iter().flatten() {
        log.record(f);
    }
    Ok(TLearnerGp { arms: [m0, m1], preprocessing: pre, method, optimizer: log })
}

/// GP T-learner on a single study. Uses `opts.preprocessing` when given,
/// otherwise statistics of `data`.
pub fn fit_tlearner_gp(data: &Dataset, opts: &CateOptions) -> Result<TLearnerGp> {
    opts.validate()?;
    let method = match data.study {
        crate::data::Study::Experimental => Method::GpExp,
        crate::data::Study::Observational => Method::GpObs,
    };
    fit_tlearner_with(data, opts.preprocessing_for(&[data])?, opts, method)
}

impl TLearnerGp {
    pub fn arm(&self, arm: u8) -> &GpModel {
        &self.arms[arm as usize]
    }

    pub fn preprocessing(&self) -> &Preprocessing {
        &self.preprocessing
    }
}

impl CateEstimator for TLearnerGp {
    fn method(&self) -> Method {
        self.method
    }

    fn tau_moments(&self, xs: &Covariates) -> Result<(Vec<f64>, Vec<f64>)> {
        let z = self.preprocessing.transform(xs)?;
        let (m0, v0) = self.arms[0].posterior(&z)?;
        let (m1, v1) = self.arms[1].posterior(&z)?;
        let shift = self.preprocessing.y_offset[1] - self.preprocessing.y_offset[0];
        let means = m0.iter().zip(&m1).map(|(a, b)| b - a + shift).collect();
        let vars = v0.iter().zip(&v1).map(|(a, b)| a + b).collect();
        Ok((means, vars))
    }

    fn report(&self) -> FitReport {
        let arms = self
            .arms
            .iter()
            .enumerate()
            .map(|(a, m)| {
                let (ne, no) = if self.method == Method::GpObs { (0, m.train().len()) } else { (m.train().len(), 0) };
                ArmReport {
                    arm: a as u8,
                    hyperparameters: Hyperparameters { kernel: m.kernel().clone(), noise_variance: m.noise_variance() },
                    log_marginal_likelihood: m.log_marginal_likelihood(),
                    n_experimental: ne,
                    n_observational: no,
                }
            })
            .collect();
        FitReport {
            method: self.method,
            rho: None,
            rho_selection: None,
            arms,
            bias_coefficients: None,
            preprocessing: self.preprocessing.clone(),
            optimizer: self.optimizer,
        }
    }

    fn optimizer_log(&self) -> OptimizerLog {
        self.optimizer
    }
}

/// `ψ = Y·(A − e) / (e(1 − e))`, unbiased for `τ(x)` under randomization
/// with probability `e`.
pub fn ipw_pseudo_outcome(y: f64, a: u8, e: f64) -> f64 {
    y * (a as f64 - e) / (e * (1.0 - e))
}

pub const OLS_RIDGE: f64 = 1e-6;

/// Observational GP T-learner corrected by a linear bias function learned
/// from trial pseudo-outcomes.
#[derive(Clone, Debug)]
pub struct ExperimentalGrounding {
    observational: TLearnerGp,
    theta: Vec<f64>,
    theta_cov: Mat<f64>,
}

pub fn fit_experimental_grounding(rct: &Dataset, obs: &Dataset, opts: &CateOptions) -> Result<ExperimentalGrounding> {
    opts.validate()?;
    dim_check("observational covariate columns", rct.dim(), obs.dim())?;
    if rct.is_empty() {
        return Err(Error::EmptyCell { study: rct.study.label(), arm: 0 });
    }
    let pre = opts.preprocessing_for(&[rct, obs])?;
    let observational = fit_tlearner_with(obs, pre, opts, Method::GpObs)?;
    let (omega, _) = observational.tau_moments(&rct.x)?;
    let e = opts.treatment_probability;
    let resid: Vec<f64> =
        rct.y.iter().zip(&rct.a).zip(&omega).map(|((&y, &a), w)| ipw_pseudo_outcome(y, a, e) - w).collect();

    let k = rct.dim() + 1;
    let design = |x: &[f64]| -> Vec<f64> { std::iter::once(1.0).chain(x.iter().copied()).collect() };
    let mut ztz = Mat::<f64>::zeros(k, k);
    let mut ztr = vec![0.0; k];
    for (x, r) in rct.x.rows().zip(&resid) {
        let z = design(x);
        for i in 0..k {
            ztr[i] += z[i] * r;
            for j in 0..k {
                ztz[(i, j)] += z[i] * z[j];
            }
        }
    }
    let theta = solve_spd_with_ridge(&ztz, &ztr, OLS_RIDGE)?;
    let rss: f64 = rct.x.rows().zip(&resid).map(|(x, r)| (r - dot(&theta, &design(x))).powi(2)).sum();
    let dof = rct.len().saturating_sub(k).max(1);
    let s2 = rss / dof as f64;
    let mut theta_cov = Mat::<f64>::zeros(k, k);
    for j in 0..k {
        let mut unit = vec![0.0; k];
        unit[j] = 1.0;
        let col = solve_spd_with_ridge(&ztz, &unit, OLS_RIDGE)?;
        for i in 0..k {
            theta_cov[(i, j)] = s2 * col[i];
        }
    }
    Ok(ExperimentalGrounding { observational, theta, theta_cov })
}

impl ExperimentalGrounding {
    /// `[intercept, x1..xp]` of the fitted bias function.
    pub fn bias_coefficients(&self) -> &[f64] {
        &self.theta
    }

    pub fn observational_model(&self) -> &TLearnerGp {
        &self.observational
    }
}

impl CateEstimator for ExperimentalGrounding {
    fn method(&self) -> Method {
        Method::ExperimentalGrounding
    }

    fn tau_moments(&self, xs: &Covariates) -> Result<(Vec<f64>, Vec<f64>)> {
        let (mut means, mut vars) = self.observational.tau_moments(xs)?;
        let k = self.theta.len();
        for (i, x) in xs.rows().enumerate() {
            let z: Vec<f64> = std::iter::once(1.0).chain(x.iter().copied()).collect();
            means[i] += dot(&self.theta, &z);
            let mut q = 0.0;
            for a in 0..k {
                for b in 0..k {
                    q += z[a] * self.theta_cov[(a, b)] * z[b];
                }
            }
            vars[i] += q.max(0.0);
        }
        Ok((means, vars))
    }

    fn report(&self) -> FitReport {
        FitReport {
            method: Method::ExperimentalGrounding,
            bias_coefficients: Some(self.theta.clone()),
            ..self.observational.report()
        }
    }

    fn optimizer_log(&self) -> OptimizerLog {
        self.observational.optimizer
    }
}

/// Fits any registered estimator on a trial and an observational study.
/// Unless `opts.preprocessing` is set, all methods standardize with the
/// pooled statistics of both studies.
pub fn fit_method(method: Method, rct: &Dataset, obs: &Dataset, opts: &CateOptions) -> Result<Box<dyn CateEstimator>> {
    opts.validate()?;
    dim_check("observational covariate columns", rct.dim(), obs.dim())?;
    let mut opts = opts.clone();
    opts.preprocessing = Some(opts.preprocessing_for(&[rct, obs])?);
    Ok(match method {
        Method::CausalIcm => Box::new(fit_causal_icm_cate(rct, obs, &opts)?),
        Method::GpExp => Box::new(fit_tlearner_gp(rct, &opts)?),
        Method::GpObs => Box::new(fit_tlearner_gp(obs, &opts)?),
        Method::ExperimentalGrounding => Box::new(fit_experimental_grounding(rct, obs, &opts)?),
    })
}
