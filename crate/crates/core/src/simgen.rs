//! Seeded simulation scenarios with known CATE and confounding functions.
//!
//! Every dataset is drawn from one ChaCha20 stream (stream id 0) seeded with
//! `seed`, in this order:
//!
//! 1. trial pool covariates, `pool_size × p` draws from `Unif[−2, 2]`, row by row;
//! 2. one `Unif[0, 1)` selection draw per pool unit (`S = 1` if below `p_S(x)`);
//! 3. one `Unif[0, 1)` treatment draw per selected unit (`A = 1` if below 0.5);
//! 4. one standard normal outcome-noise draw per selected unit;
//! 5. observational covariates, `n_obs × p` draws from `Unif[−2, 2]`;
//! 6. one `Unif[0, 1)` treatment draw per unit (`A = 1` if below `e(x)`);
//! 7. one standard normal confounder draw per unit;
//! 8. one standard normal outcome-noise draw per unit.
//!
//! Evaluation grids for the five-dimensional scenarios use stream id 1.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{Covariates, Dataset, Study};
use crate::error::{Error, Result};
use crate::linalg::solve_spd_with_ridge;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioId {
    /// One covariate, linear CATE and linear confounding.
    Uni1,
    /// One covariate, quadratic CATE and sinusoidal confounding.
    Uni2,
    /// Five covariates, linear CATE and linear confounding.
    Multi1,
    /// Five covariates, quadratic CATE and sinusoidal confounding.
    Multi2,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 4] = [ScenarioId::Uni1, ScenarioId::Uni2, ScenarioId::Multi1, ScenarioId::Multi2];

    pub fn dim(self) -> usize {
        match self {
            ScenarioId::Uni1 | ScenarioId::Uni2 => 1,
            ScenarioId::Multi1 | ScenarioId::Multi2 => 5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ScenarioId::Uni1 => "uni1",
            ScenarioId::Uni2 => "uni2",
            ScenarioId::Multi1 => "multi1",
            ScenarioId::Multi2 => "multi2",
        }
    }

    pub fn is_univariate(self) -> bool {
        self.dim() == 1
    }
}

impl std::str::FromStr for ScenarioId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioId::ALL
            .into_iter()
            .find(|id| id.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::Validation(format!("unknown scenario {s:?}")))
    }
}

impl std::fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

fn default_pool() -> usize {
    1000
}

fn default_scale() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimScenario {
    pub id: ScenarioId,
    /// Candidates screened for trial participation.
    #[serde(default = "default_pool")]
    pub pool_size: usize,
    #[serde(default = "default_pool")]
    pub n_obs: usize,
    /// Multiplier on the whole trial-selection logit. `1` reproduces the
    /// scenario's own selection model; smaller values widen the overlap between
    /// the studies and `0` selects everyone with probability one half.
    #[serde(default = "default_scale")]
    pub selection_scale: f64,
}

impl SimScenario {
    pub fn new(id: ScenarioId) -> Self {
        Self { id, pool_size: default_pool(), n_obs: default_pool(), selection_scale: default_scale() }
    }

    pub fn with_sizes(mut self, pool_size: usize, n_obs: usize) -> Self {
        self.pool_size = pool_size;
        self.n_obs = n_obs;
        self
    }

    pub fn with_selection_scale(mut self, scale: f64) -> Self {
        self.selection_scale = scale;
        self
    }

    pub fn dim(&self) -> usize {
        self.id.dim()
    }

    pub fn validate(&self) -> Result<()> {
        if self.pool_size == 0 || self.n_obs == 0 {
            return Err(Error::Validation("pool_size and n_obs must be at least 1".into()));
        }
        if !(self.selection_scale.is_finite() && self.selection_scale >= 0.0) {
            return Err(Error::Validation(format!("selection_scale must be >= 0, got {}", self.selection_scale)));
        }
        Ok(())
    }

    /// Logit of trial participation `p(S = 1 | x)`.
    pub fn selection_logit(&self, x: &[f64]) -> f64 {
        let raw = match self.id {
            ScenarioId::Uni1 | ScenarioId::Uni2 => -3.0 - 3.0 * x[0],
            ScenarioId::Multi1 | ScenarioId::Multi2 => -10.0 - 8.0 * x[0] - 8.0 * x[1],
        };
        self.selection_scale * raw
    }

    pub fn selection_probability(&self, x: &[f64]) -> f64 {
        logistic(self.selection_logit(x))
    }

    /// Observational treatment propensity `e(x)`.
    pub fn treatment_probability(&self, x: &[f64]) -> f64 {
        match self.id {
            ScenarioId::Uni1 | ScenarioId::Uni2 => logistic(-x[0]),
            ScenarioId::Multi1 | ScenarioId::Multi2 => logistic(-(x[0] + x[1])),
        }
    }

    /// Outcome under control, shared by both studies.
    pub fn baseline(&self, x: &[f64]) -> f64 {
        match self.id {
            ScenarioId::Uni1 => x[0],
            ScenarioId::Uni2 => x[0] * x[0] - 1.0,
            ScenarioId::Multi1 | ScenarioId::Multi2 => x.iter().sum(),
        }
    }

    /// `g(x)` in `U ~ N((2A − 1)·g(x), 1)`.
    pub fn confounder_shift(&self, x: &[f64]) -> f64 {
        match self.id {
            ScenarioId::Uni1 => x[0],
            ScenarioId::Uni2 => (x[0] - 1.0).sin(),
            ScenarioId::Multi1 => x[0] + x[1],
            ScenarioId::Multi2 => x[0].sin() + x[1].sin(),
        }
    }

    pub fn truth(&self) -> GroundTruth {
        GroundTruth { scenario: self.id }
    }
}

pub fn logistic(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Known CATE and confounding functions of a scenario.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub scenario: ScenarioId,
}

impl GroundTruth {
    pub fn tau(&self, x: &[f64]) -> f64 {
        match self.scenario {
            ScenarioId::Uni1 => 1.0 + x[0],
            ScenarioId::Uni2 => 1.0 + x[0] + x[0] * x[0],
            ScenarioId::Multi1 => 1.0 + x[0] + x[1],
            ScenarioId::Multi2 => 1.0 + x[0] + x[0] * x[0] + x[1] + x[1] * x[1],
        }
    }

    /// Hidden confounding effect `η(x) = 2·g(x)`, the amount by which the
    /// observational arm contrast exceeds the CATE.
    pub fn eta(&self, x: &[f64]) -> f64 {
        2.0 * SimScenario::new(self.scenario).confounder_shift(x)
    }

    /// `E[Y | A=1, x, S=o] − E[Y | A=0, x, S=o] = τ(x) + η(x)`.
    pub fn obs_contrast(&self, x: &[f64]) -> f64 {
        self.tau(x) + self.eta(x)
    }

    pub fn tau_at(&self, xs: &Covariates) -> Vec<f64> {
        xs.rows().map(|x| self.tau(x)).collect()
    }
}

#[derive(Clone, Debug)]
pub struct Simulation {
    pub rct: Dataset,
    pub obs: Dataset,
    pub truth: GroundTruth,
}

fn uniform_rows(rng: &mut ChaCha20Rng, n: usize, p: usize) -> Covariates {
    let data = (0..n * p).map(|_| -2.0 + 4.0 * rng.random::<f64>()).collect();
    Covariates::from_row_major(n, p, data).expect("buffer sized n*p")
}

pub fn simulate(scenario: &SimScenario, seed: u64) -> Result<Simulation> {
    scenario.validate()?;
    let p = scenario.dim();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);

    let pool = uniform_rows(&mut rng, scenario.pool_size, p);
    let selected: Vec<usize> = (0..scenario.pool_size)
        .filter(|&i| rng.random::<f64>() < scenario.selection_probability(pool.row(i)))
        .collect();
    let rx = pool.select(&selected);
    let ra: Vec<u8> = (0..rx.nrows()).map(|_| u8::from(rng.random::<f64>() < 0.5)).collect();
    let truth = scenario.truth();
    let ry: Vec<f64> = rx
        .rows()
        .zip(&ra)
        .map(|(x, &a)| {
            let eps: f64 = rng.sample(StandardNormal);
            f64::from(a) * truth.tau(x) + scenario.baseline(x) + eps
        })
        .collect();

    let ox = uniform_rows(&mut rng, scenario.n_obs, p);
    let oa: Vec<u8> =
        ox.rows().map(|x| u8::from(rng.random::<f64>() < scenario.treatment_probability(x))).collect();
    let u: Vec<f64> = ox
        .rows()
        .zip(&oa)
        .map(|(x, &a)| {
            let z: f64 = rng.sample(StandardNormal);
            (2.0 * f64::from(a) - 1.0) * scenario.confounder_shift(x) + z
        })
        .collect();
    let oy: Vec<f64> = ox
        .rows()
        .zip(&oa)
        .zip(&u)
        .map(|((x, &a), u)| {
            let eps: f64 = rng.sample(StandardNormal);
            f64::from(a) * truth.tau(x) + scenario.baseline(x) + u + eps
        })
        .collect();

    Ok(Simulation {
        rct: Dataset::new(rx, ry, ra, Study::Experimental)?,
        obs: Dataset::new(ox, oy, oa, Study::Observational)?,
        truth,
    })
}

/// Evaluation inputs: an equispaced grid on `[−2, 2]` for one covariate,
/// otherwise a seeded uniform sample from `[−2, 2]^p`.
pub fn eval_grid(scenario: &SimScenario, n_points: usize, seed: u64) -> Result<Covariates> {
    if n_points < 2 {
        return Err(Error::Validation(format!("evaluation grid needs at least 2 points, got {n_points}")));
    }
    if scenario.id.is_univariate() {
        let step = 4.0 / (n_points - 1) as f64;
        let mut xs: Vec<f64> = (0..n_points).map(|i| -2.0 + step * i as f64).collect();
        xs[n_points - 1] = 2.0;
        return Ok(Covariates::from_column(&xs));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(1);
    Ok(uniform_rows(&mut rng, n_points, scenario.dim()))
}

/// Least-squares arm contrast `Ê[Y|A=1,x] − Ê[Y|A=0,x]` at each grid row,
/// each arm fitted with a polynomial of total degree `degree` in the first
/// two covariates plus linear terms in the rest. Covariates are assumed to
/// lie roughly in `[−2, 2]`.
pub fn regression_contrast(data: &Dataset, grid: &Covariates, degree: usize) -> Result<Vec<f64>> {
    let basis = |x: &[f64]| polynomial_basis(x, degree);
    let mut coefs = Vec::with_capacity(2);
    for arm in [0u8, 1] {
        let s = data.nonempty_arm(arm)?;
        let k = basis(s.x.row(0)).len();
        if s.len() < k {
            return Err(Error::Validation(format!("arm {arm} has {} units for {k} regressors", s.len())));
        }
        let mut xtx = faer::Mat::<f64>::zeros(k, k);
        let mut xty = vec![0.0; k];
        for (x, y) in s.x.rows().zip(&s.y) {
            let b = basis(x);
            for i in 0..k {
                xty[i] += b[i] * y;
                for j in 0..=i {
                    xtx[(i, j)] += b[i] * b[j];
                }
            }
        }
        for i in 0..k {
            for j in 0..i {
                xtx[(j, i)] = xtx[(i, j)];
            }
        }
        coefs.push(solve_spd_with_ridge(&xtx, &xty, 1e-8)?);
    }
    Ok(grid
        .rows()
        .map(|x| {
            let b = basis(x);
            let f = |c: &[f64]| c.iter().zip(&b).map(|(c, b)| c * b).sum::<f64>();
            f(&coefs[1]) - f(&coefs[0])
        })
        .collect())
}

fn polynomial_basis(x: &[f64], degree: usize) -> Vec<f64> {
    let u = x[0] / 2.0;
    let mut out = Vec::new();
    if x.len() == 1 {
        for d in 0..=degree {
            out.push(u.powi(d as i32));
        }
        return out;
    }
    let v = x[1] / 2.0;
    for total in 0..=degree {
        for i in 0..=total {
            out.push(u.powi(i as i32) * v.powi((total - i) as i32));
        }
    }
    out.extend(x[2..].iter().map(|t| t / 2.0));
    out
}

/// Large-sample check of a scenario against its stated ground truth.
#[derive(Clone, Debug, Serialize)]
pub struct DgpValidation {
    pub scenario: ScenarioId,
    pub rct_grid: Vec<Vec<f64>>,
    pub rct_contrast: Vec<f64>,
    pub rct_tau: Vec<f64>,
    pub obs_grid: Vec<Vec<f64>>,
    pub obs_contrast: Vec<f64>,
    pub tau_plus_eta: Vec<f64>,
    pub tau_minus_eta: Vec<f64>,
    /// `+1` when the observational contrast tracks `τ + η`, `−1` for `τ − η`.
    pub resolved_eta_sign: f64,
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

impl DgpValidation {
    pub fn rct_max_error(&self) -> f64 {
        max_abs_diff(&self.rct_contrast, &self.rct_tau)
    }

    /// Observational error against the contrast implied by the resolved sign.
    pub fn obs_max_error(&self) -> f64 {
        let target = if self.resolved_eta_sign > 0.0 { &self.tau_plus_eta } else { &self.tau_minus_eta };
        max_abs_diff(&self.obs_contrast, target)
    }
}

/// Simulates a large pool and observational sample (`n` each) and compares
/// regression-estimated arm contrasts with the analytic ones on a 9-point
/// grid inside each study's support.
pub fn validate_dgp(id: ScenarioId, n: usize, seed: u64) -> Result<DgpValidation> {
    let scenario = SimScenario::new(id).with_sizes(n, n);
    let sim = simulate(&scenario, seed)?;
    let diag = |t: f64| {
        let mut r = vec![0.0; id.dim()];
        r[0] = t;
        if id.dim() > 1 {
            r[1] = t;
        }
        r
    };
    // Trial grid: central quantiles of the selected units' covariate mean.
    let mut centre: Vec<f64> = sim
        .rct
        .x
        .rows()
        .map(|x| if id.dim() > 1 { 0.5 * (x[0] + x[1]) } else { x[0] })
        .collect();
    centre.sort_by(f64::total_cmp);
    let rct_rows: Vec<Vec<f64>> = (0..9)
        .map(|i| {
            let q = 0.1 + 0.8 * i as f64 / 8.0;
            diag(centre[((centre.len() - 1) as f64 * q).round() as usize])
        })
        .collect();
    let half_width = if id.dim() > 1 { 1.2 } else { 1.6 };
    let obs_rows: Vec<Vec<f64>> = (0..9).map(|i| diag(-half_width + 2.0 * half_width * i as f64 / 8.0)).collect();
    let rct_grid = Covariates::from_rows(&rct_rows)?;
    let obs_grid = Covariates::from_rows(&obs_rows)?;
    let degree = if id.dim() > 1 { 4 } else { 5 };
    let rct_contrast = regression_contrast(&sim.rct, &rct_grid, degree)?;
    let obs_contrast = regression_contrast(&sim.obs, &obs_grid, degree)?;
    let truth = sim.truth;
    let tau_plus_eta: Vec<f64> = obs_grid.rows().map(|x| truth.tau(x) + truth.eta(x)).collect();
    let tau_minus_eta: Vec<f64> = obs_grid.rows().map(|x| truth.tau(x) - truth.eta(x)).collect();
    let resolved_eta_sign = if max_abs_diff(&obs_contrast, &tau_plus_eta) <= max_abs_diff(&obs_contrast, &tau_minus_eta)
    {
        1.0
    } else {
        -1.0
    };
    Ok(DgpValidation {
        scenario: id,
        rct_tau: truth.tau_at(&rct_grid),
        rct_grid: rct_rows,
        rct_contrast,
        obs_grid: obs_rows,
        obs_contrast,
        tau_plus_eta,
        tau_minus_eta,
        resolved_eta_sign,
    })
}
