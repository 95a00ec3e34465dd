//! Choosing the borrowing parameter `ρ` by weighted cross-validation on
//! held-out trial units.
//!
//! For each `ρ` on a grid the joint model is refitted on the training folds
//! of the trial plus the whole observational study, and scored by
//! `L(ρ) = Σ w(x̃ᵢ)(ỹᵢ − mᵉ(x̃ᵢ))²` over held-out trial units only. The
//! weight `w(x) = 1 / (1 − p(S = o | x))` up-weights trial units that look
//! like observational ones, tilting the choice towards extrapolation.

use faer::Mat;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Covariates, Samples};
use crate::error::{dim_check, Error, Result};
use crate::gp::{optimize_hyperparameters, HyperFit, HyperObjective, HyperOptions, Hyperparameters};
use crate::icm::icm_fit;
use crate::kernels::KernelFamily;
use crate::linalg::{dot, solve_spd_with_ridge};
use crate::simgen::logistic;

/// Ridge-penalized logistic regression `p(label = 1 | x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub ridge_lambda: f64,
}

const PROB_FLOOR: f64 = 1e-12;

impl LogisticModel {
    pub fn logit(&self, x: &[f64]) -> f64 {
        self.intercept + dot(&self.coefficients, x)
    }

    /// Probability of label 1, kept strictly inside `(0, 1)`.
    pub fn probability(&self, x: &[f64]) -> f64 {
        logistic(self.logit(x)).clamp(PROB_FLOOR, 1.0 - PROB_FLOOR)
    }
}

const IRLS_MAX_ITER: usize = 100;
const IRLS_TOL: f64 = 1e-8;
const RIDGE_RETRIES: usize = 3;

/// Fits `p(S = o | x)` with label 1 for observational units; ridge strength
/// is `1e-4·n`.
pub fn fit_study_propensity(experimental: &Covariates, observational: &Covariates) -> Result<LogisticModel> {
    if experimental.is_empty() || observational.is_empty() {
        return Err(Error::Validation("study propensity needs units from both studies".into()));
    }
    dim_check("observational covariate columns", experimental.ncols(), observational.ncols())?;
    let x = experimental.vstack(observational)?;
    let mut labels = vec![0.0; experimental.nrows()];
    labels.resize(x.nrows(), 1.0);
    fit_logistic(&x, &labels, 1e-4 * x.nrows() as f64)
}

/// IRLS with step halving; on divergence the ridge is multiplied by 10, up
/// to three times.
pub fn fit_logistic(x: &Covariates, labels: &[f64], ridge_lambda: f64) -> Result<LogisticModel> {
    dim_check("label count", x.nrows(), labels.len())?;
    let mut lambda = ridge_lambda;
    for _ in 0..=RIDGE_RETRIES {
        if let Some(beta) = irls(x, labels, lambda) {
            return Ok(LogisticModel { intercept: beta[0], coefficients: beta[1..].to_vec(), ridge_lambda: lambda });
        }
        lambda *= 10.0;
    }
    Err(Error::Numerical(format!("logistic IRLS diverged even with ridge {:.3e}", lambda / 10.0)))
}

fn penalized_loglik(x: &Covariates, labels: &[f64], beta: &[f64], lambda: f64) -> f64 {
    let ll: f64 = x
        .rows()
        .zip(labels)
        .map(|(r, &t)| {
            let eta = beta[0] + dot(&beta[1..], r);
            // log σ(η) = −log(1 + e^{−η}), computed stably
            let log1pexp = |z: f64| if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
            t * -log1pexp(-eta) + (1.0 - t) * -log1pexp(eta)
        })
        .sum();
    ll - 0.5 * lambda * beta[1..].iter().map(|b| b * b).sum::<f64>()
}

fn irls(x: &Covariates, labels: &[f64], lambda: f64) -> Option<Vec<f64>> {
    let k = x.ncols() + 1;
    let mut beta = vec![0.0; k];
    let mut current = penalized_loglik(x, labels, &beta, lambda);
    for _ in 0..IRLS_MAX_ITER {
        let mut hess = Mat::<f64>::zeros(k, k);
        let mut grad = vec![0.0; k];
        let mut row = vec![1.0; k];
        for (r, &t) in x.rows().zip(labels) {
            row[1..].copy_from_slice(r);
            let mu = logistic(dot(&beta, &row));
            let w = (mu * (1.0 - mu)).max(1e-12);
            for i in 0..k {
                grad[i] += (t - mu) * row[i];
                for j in 0..=i {
                    hess[(i, j)] += w * row[i] * row[j];
                }
            }
        }
        for i in 1..k {
            grad[i] -= lambda * beta[i];
            hess[(i, i)] += lambda;
        }
        for i in 0..k {
            for j in 0..i {
                hess[(j, i)] = hess[(i, j)];
            }
        }
        let step = solve_spd_with_ridge(&hess, &grad, 1e-10).ok()?;
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let cand: Vec<f64> = beta.iter().zip(&step).map(|(b, s)| b + t * s).collect();
            let value = penalized_loglik(x, labels, &cand, lambda);
            if value.is_finite() && value >= current - 1e-12 {
                accepted = Some((cand, value));
                break;
            }
            t *= 0.5;
        }
        let (cand, value) = accepted?;
        let change = cand.iter().zip(&beta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        beta = cand;
        current = value;
        if !beta.iter().all(|b| b.is_finite()) {
            return None;
        }
        if change < IRLS_TOL {
            break;
        }
    }
    Some(beta)
}

pub const MAX_PROPENSITY: f64 = 0.99;

/// `w = 1 / (1 − min(p, 0.99))`, so weights lie in `[1, 100]`.
pub fn weight_from_probability(p: f64) -> f64 {
    1.0 / (1.0 - p.min(MAX_PROPENSITY))
}

pub fn propensity_weights(model: &LogisticModel, xs: &Covariates) -> Vec<f64> {
    xs.rows().map(|x| weight_from_probability(model.probability(x))).collect()
}

/// How kernel hyperparameters are obtained inside cross-validation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TuningMode {
    /// Re-optimize the marginal likelihood for every (fold, ρ) fit.
    #[default]
    Full,
    /// Optimize once on all data at `ρ = 0.5` and reuse for every fit.
    Fast,
}

impl std::str::FromStr for TuningMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(TuningMode::Full),
            "fast" => Ok(TuningMode::Fast),
            other => Err(Error::Validation(format!("unknown tuning mode {other:?}"))),
        }
    }
}

pub const FAST_MODE_RHO: f64 = 0.5;

/// The default search grid `0.0, 0.1, …, 1.0`.
pub fn default_rho_grid() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

#[derive(Clone, Debug)]
pub struct TuneOptions {
    pub grid: Vec<f64>,
    pub folds: usize,
    pub seed: u64,
    pub family: KernelFamily,
    pub mode: TuningMode,
    pub hyper: HyperOptions,
    /// Skips the search entirely and uses these for every fit.
    pub fixed: Option<Hyperparameters>,
}

impl Default for TuneOptions {
    fn default() -> Self {
        Self {
            grid: default_rho_grid(),
            folds: 5,
            seed: 0,
            family: KernelFamily::Rbf,
            mode: TuningMode::Full,
            hyper: HyperOptions::default(),
            fixed: None,
        }
    }
}

impl TuneOptions {
    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::Validation("rho grid is empty".into()));
        }
        if let Some(r) = self.grid.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return Err(Error::Validation(format!("rho grid value {r} outside [0, 1]")));
        }
        if self.folds < 2 {
            return Err(Error::Validation(format!("need at least 2 folds, got {}", self.folds)));
        }
        Ok(())
    }
}

/// Tally of hyperparameter searches and how many ended below a start point.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OptimizerLog {
    pub fits: usize,
    pub violations: usize,
}

impl OptimizerLog {
    pub fn record(&mut self, fit: &HyperFit) {
        self.fits += 1;
        if !fit.improved_on_starts() {
            self.violations += 1;
        }
    }

    pub fn merge(&mut self, other: OptimizerLog) {
        self.fits += other.fits;
        self.violations += other.violations;
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RhoSelection {
    pub grid: Vec<f64>,
    pub losses: Vec<f64>,
    pub chosen_rho: f64,
    /// Fold index of each trial unit, in input order.
    pub fold_assignments: Vec<usize>,
    pub optimizer: OptimizerLog,
}

/// Random balanced partition of `n` units into `folds` groups.
pub fn assign_folds(n: usize, folds: usize, seed: u64) -> Result<Vec<usize>> {
    if n < folds {
        return Err(Error::Validation(format!("{n} trial units cannot fill {folds} folds")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(2);
    order.shuffle(&mut rng);
    let mut out = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        out[i] = pos % folds;
    }
    let smallest = n / folds;
    if smallest < 2 {
        return Err(Error::Validation(format!(
            "a fold would hold {smallest} trial unit(s); need at least 2 ({n} units, {folds} folds)"
        )));
    }
    Ok(out)
}

/// Grid value with the smallest loss; exact ties (up to rounding) go to the
/// smaller `ρ`.
pub fn select_rho(grid: &[f64], losses: &[f64]) -> f64 {
    let min = losses.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = min.abs() * 1e-12;
    grid.iter()
        .zip(losses)
        .filter(|(_, &l)| l <= min + tol)
        .map(|(&r, _)| r)
        .fold(f64::INFINITY, f64::min)
}

/// Resolves where hyperparameters come from for the CV fits.
pub(crate) fn frozen_hyperparameters(
    experimental: &Samples,
    observational: &Samples,
    opts: &TuneOptions,
    log: &mut OptimizerLog,
) -> Result<Option<Hyperparameters>> {
    if let Some(h) = &opts.fixed {
        return Ok(Some(h.clone()));
    }
    match opts.mode {
        TuningMode::Full => Ok(None),
        TuningMode::Fast => {
            let fit = optimize_hyperparameters(
                HyperObjective::Icm { experimental, observational, rho: FAST_MODE_RHO },
                opts.family,
                &opts.hyper,
            )?;
            log.record(&fit);
            Ok(Some(fit.hyperparameters))
        }
    }
}

/// Summed weighted held-out loss for every grid value.
pub(crate) fn cv_losses(
    experimental: &Samples,
    observational: &Samples,
    weights: &[f64],
    folds: &[usize],
    n_folds: usize,
    opts: &TuneOptions,
    frozen: Option<&Hyperparameters>,
    log: &mut OptimizerLog,
) -> Result<Vec<f64>> {
    dim_check("weight count", experimental.len(), weights.len())?;
    let mut losses = vec![0.0; opts.grid.len()];
    for fold in 0..n_folds {
        let held: Vec<usize> = (0..folds.len()).filter(|&i| folds[i] == fold).collect();
        let train: Vec<usize> = (0..folds.len()).filter(|&i| folds[i] != fold).collect();
        if held.len() < 2 {
            return Err(Error::Validation(format!("fold {fold} holds {} trial unit(s)", held.len())));
        }
        let train_e = experimental.select(&train);
        let held_e = experimental.select(&held);
        for (g, &rho) in opts.grid.iter().enumerate() {
            let hp = match frozen {
                Some(h) => h.clone(),
                None => {
                    let fit = optimize_hyperparameters(
                        HyperObjective::Icm { experimental: &train_e, observational, rho },
                        opts.family,
                        &opts.hyper,
                    )?;
                    log.record(&fit);
                    fit.hyperparameters
                }
            };
            let model = icm_fit(train_e.clone(), observational.clone(), rho, hp.kernel, hp.noise_variance)?;
            let pred = model.experimental_means(&held_e.x)?;
            losses[g] += held
                .iter()
                .zip(&pred)
                .zip(&held_e.y)
                .map(|((&i, m), y)| weights[i] * (y - m) * (y - m))
                .sum::<f64>();
        }
    }
    Ok(losses)
}

/// Cross-validated `ρ` for a single arm; weights come from a study
/// propensity model fitted on both covariate sets (all ones when the
/// observational study is empty).
pub fn tune_rho(experimental: &Samples, observational: &Samples, opts: &TuneOptions) -> Result<RhoSelection> {
    opts.validate()?;
    let weights = if observational.is_empty() {
        vec![1.0; experimental.len()]
    } else {
        let model = fit_study_propensity(&experimental.x, &observational.x)?;
        propensity_weights(&model, &experimental.x)
    };
    tune_rho_weighted(experimental, observational, &weights, opts)
}

/// [`tune_rho`] with caller-supplied weights for the trial units.
pub fn tune_rho_weighted(
    experimental: &Samples,
    observational: &Samples,
    weights: &[f64],
    opts: &TuneOptions,
) -> Result<RhoSelection> {
    opts.validate()?;
    let folds = assign_folds(experimental.len(), opts.folds, opts.seed)?;
    let mut log = OptimizerLog::default();
    let frozen = frozen_hyperparameters(experimental, observational, opts, &mut log)?;
    let losses = cv_losses(experimental, observational, weights, &folds, opts.folds, opts, frozen.as_ref(), &mut log)?;
    Ok(RhoSelection {
        chosen_rho: select_rho(&opts.grid, &losses),
        grid: opts.grid.clone(),
        losses,
        fold_assignments: folds,
        optimizer: log,
    })
}
