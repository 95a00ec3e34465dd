//! Replication benchmarks: accuracy, interval coverage, in/out-of-support
//! error, parameter sweeps and runtime tables.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cate::{fit_method, CateOptions, Method, RhoChoice};
use crate::data::Covariates;
use crate::error::{dim_check, Error, Result};
use crate::gp::{mean, std_dev};
use crate::kernels::KernelFamily;
use crate::simgen::{eval_grid, simulate, SimScenario};
use crate::tuning::{default_rho_grid, OptimizerLog, TuningMode};

/// Root mean squared difference.
pub fn rmse(predicted: &[f64], truth: &[f64]) -> Result<f64> {
    Ok(mse(predicted, truth)?.sqrt())
}

fn mse(predicted: &[f64], truth: &[f64]) -> Result<f64> {
    dim_check("prediction count", truth.len(), predicted.len())?;
    if truth.is_empty() {
        return Err(Error::Validation("cannot score an empty prediction vector".into()));
    }
    Ok(predicted.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / truth.len() as f64)
}

/// Per-point fraction of replications whose interval `[lo, hi]` contains
/// the truth. `intervals[r][j]` is replication `r` at grid point `j`.
pub fn coverage_curve(intervals: &[Vec<(f64, f64)>], truth: &[f64]) -> Result<Vec<f64>> {
    if intervals.is_empty() {
        return Err(Error::Validation("coverage needs at least one replication".into()));
    }
    let mut hits = vec![0usize; truth.len()];
    for rep in intervals {
        dim_check("interval count", truth.len(), rep.len())?;
        for (j, (&(lo, hi), &t)) in rep.iter().zip(truth).enumerate() {
            if lo <= t && t <= hi {
                hits[j] += 1;
            }
        }
    }
    Ok(hits.iter().map(|&h| h as f64 / intervals.len() as f64).collect())
}

/// Axis-aligned region treated as supported by the trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl SupportBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        dim_check("support bound length", lower.len(), upper.len())?;
        if lower.iter().zip(&upper).any(|(l, u)| !(l <= u)) {
            return Err(Error::Validation("support box has a lower bound above its upper bound".into()));
        }
        Ok(Self { lower, upper })
    }

    /// Per-dimension empirical range of the rows of `x`.
    pub fn from_sample(x: &Covariates) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::Validation("support of an empty sample is undefined".into()));
        }
        let p = x.ncols();
        let mut lower = vec![f64::INFINITY; p];
        let mut upper = vec![f64::NEG_INFINITY; p];
        for r in x.rows() {
            for j in 0..p {
                lower[j] = lower[j].min(r[j]);
                upper[j] = upper[j].max(r[j]);
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(&self.lower).zip(&self.upper).all(|((v, l), u)| l <= v && v <= u)
    }
}

/// MSE inside and outside a support region; a side with no grid points is
/// `None`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitMse {
    pub in_mse: Option<f64>,
    pub out_mse: Option<f64>,
    pub n_in: usize,
    pub n_out: usize,
}

pub fn split_support_mse(predicted: &[f64], truth: &[f64], grid: &Covariates, support: &SupportBox) -> Result<SplitMse> {
    dim_check("prediction count", truth.len(), predicted.len())?;
    dim_check("grid rows", truth.len(), grid.nrows())?;
    dim_check("support dimension", grid.ncols(), support.lower.len())?;
    let (mut inside, mut outside) = ((vec![], vec![]), (vec![], vec![]));
    for (i, x) in grid.rows().enumerate() {
        let side = if support.contains(x) { &mut inside } else { &mut outside };
        side.0.push(predicted[i]);
        side.1.push(truth[i]);
    }
    let side_mse = |s: &(Vec<f64>, Vec<f64>)| if s.0.is_empty() { Ok(None) } else { mse(&s.0, &s.1).map(Some) };
    Ok(SplitMse { in_mse: side_mse(&inside)?, out_mse: side_mse(&outside)?, n_in: inside.0.len(), n_out: outside.0.len() })
}

/// One dimension along which a benchmark is repeated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Sweep {
    /// Fixed `ρ` values for Causal-ICM.
    RhoGrid(Vec<f64>),
    KernelFamilies(Vec<KernelFamily>),
    NObsList(Vec<usize>),
    /// Multipliers on the trial-selection logit.
    OverlapLevels(Vec<f64>),
}

fn default_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}
fn default_replications() -> usize {
    20
}
fn default_grid_size() -> usize {
    50
}
fn default_level() -> f64 {
    0.95
}
fn default_folds() -> usize {
    5
}
fn default_rho_mode() -> RhoChoice {
    RhoChoice::Auto
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub scenario: SimScenario,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_rho_mode")]
    pub rho_mode: RhoChoice,
    #[serde(default = "default_grid_size")]
    pub grid_size: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub kernel: KernelFamily,
    #[serde(default = "default_level")]
    pub level: f64,
    #[serde(default)]
    pub tuning_mode: TuningMode,
    #[serde(default = "default_folds")]
    pub folds: usize,
    /// Candidate values searched when `rho_mode` is `auto`.
    #[serde(default = "default_rho_grid")]
    pub tuning_grid: Vec<f64>,
    #[serde(default)]
    pub sweep: Option<Sweep>,
}

impl BenchmarkConfig {
    pub fn new(scenario: SimScenario) -> Self {
        Self {
            scenario,
            methods: default_methods(),
            replications: default_replications(),
            rho_mode: default_rho_mode(),
            grid_size: default_grid_size(),
            seed: 0,
            kernel: KernelFamily::default(),
            level: default_level(),
            tuning_mode: TuningMode::default(),
            folds: default_folds(),
            tuning_grid: default_rho_grid(),
            sweep: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        if self.replications == 0 {
            return Err(Error::Validation("replications must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Validation("methods list is empty".into()));
        }
        if self.grid_size < 2 {
            return Err(Error::Validation(format!("grid_size must be at least 2, got {}", self.grid_size)));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::Validation(format!("level must lie in (0, 1), got {}", self.level)));
        }
        if let RhoChoice::Fixed(r) = self.rho_mode {
            crate::icm::coregionalization_matrix(r)?;
        }
        let in_unit = |v: &f64| (0.0..=1.0).contains(v);
        if self.tuning_grid.is_empty() || !self.tuning_grid.iter().all(in_unit) {
            return Err(Error::Validation("tuning_grid must be a non-empty list of values in [0, 1]".into()));
        }
        match &self.sweep {
            Some(Sweep::RhoGrid(v)) if v.is_empty() || !v.iter().all(in_unit) => {
                Err(Error::Validation("rho_grid sweep must be a non-empty list of values in [0, 1]".into()))
            }
            Some(Sweep::KernelFamilies(v)) if v.is_empty() => Err(Error::Validation("kernel_families sweep is empty".into())),
            Some(Sweep::NObsList(v)) if v.is_empty() || v.contains(&0) => {
                Err(Error::Validation("n_obs_list sweep must be a non-empty list of positive sizes".into()))
            }
            Some(Sweep::OverlapLevels(v)) if v.is_empty() || !v.iter().all(|s| s.is_finite() && *s >= 0.0) => {
                Err(Error::Validation("overlap_levels sweep must be a non-empty list of values >= 0".into()))
            }
            _ => Ok(()),
        }
    }

    /// Configurations of every sweep point, with their labels.
    pub fn variants(&self) -> Vec<Variant> {
        let base = Variant { label: String::new(), scenario: self.scenario.clone(), kernel: self.kernel, rho: self.rho_mode };
        match &self.sweep {
            None => vec![base],
            Some(Sweep::RhoGrid(v)) => {
                v.iter().map(|&r| Variant { label: format!("rho={r}"), rho: RhoChoice::Fixed(r), ..base.clone() }).collect()
            }
            Some(Sweep::KernelFamilies(v)) => {
                v.iter().map(|&k| Variant { label: format!("kernel={k}"), kernel: k, ..base.clone() }).collect()
            }
            Some(Sweep::NObsList(v)) => v
                .iter()
                .map(|&n| Variant {
                    label: format!("n_obs={n}"),
                    scenario: self.scenario.clone().with_sizes(self.scenario.pool_size, n),
                    ..base.clone()
                })
                .collect(),
            Some(Sweep::OverlapLevels(v)) => v
                .iter()
                .map(|&s| Variant {
                    label: format!("overlap={s}"),
                    scenario: self.scenario.clone().with_selection_scale(s),
                    ..base.clone()
                })
                .collect(),
        }
    }

    fn cate_options(&self, variant: &Variant, seed: u64) -> CateOptions {
        CateOptions {
            family: variant.kernel,
            rho: variant.rho,
            seed,
            tuning_mode: self.tuning_mode,
            folds: self.folds,
            rho_grid: self.tuning_grid.clone(),
            ..CateOptions::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Variant {
    /// Empty when the benchmark has no sweep.
    pub label: String,
    pub scenario: SimScenario,
    pub kernel: KernelFamily,
    pub rho: RhoChoice,
}

/// `method` or `method@variant`.
pub fn series_label(method: Method, variant: &str) -> String {
    if variant.is_empty() { method.id().to_string() } else { format!("{}@{variant}", method.id()) }
}

/// Outcome of fitting one method on one replication.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub series: String,
    pub method: Method,
    pub variant: String,
    pub replication: usize,
    pub seed: u64,
    pub error: Option<String>,
    pub rmse: Option<f64>,
    pub in_mse: Option<f64>,
    pub out_mse: Option<f64>,
    pub rho: Option<f64>,
    pub seconds: f64,
    pub optimizer: OptimizerLog,
    /// Whether each grid point's interval contains the truth.
    #[serde(skip)]
    pub covered: Vec<bool>,
    #[serde(skip)]
    pub predictions: Vec<f64>,
}

impl ReplicationRecord {
    pub fn succeeded(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TimingStats {
    pub mean: f64,
    pub sd: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

impl TimingStats {
    pub fn from_samples(v: &[f64]) -> Self {
        if v.is_empty() {
            return Self::default();
        }
        let mut s = v.to_vec();
        s.sort_by(f64::total_cmp);
        let n = s.len();
        let median = if n % 2 == 1 { s[n / 2] } else { 0.5 * (s[n / 2 - 1] + s[n / 2]) };
        Self { mean: mean(v), sd: sample_sd(v), median, min: s[0], max: s[n - 1] }
    }
}

/// Sample standard deviation (`n − 1` denominator); zero for one value.
pub fn sample_sd(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let n = v.len() as f64;
    std_dev(v) * (n / (n - 1.0)).sqrt()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeriesSummary {
    pub series: String,
    pub method: Method,
    pub variant: String,
    pub successes: usize,
    pub failures: usize,
    pub rmse_mean: Option<f64>,
    pub rmse_sd: Option<f64>,
    pub in_mse_mean: Option<f64>,
    pub out_mse_mean: Option<f64>,
    pub mean_coverage: Option<f64>,
    pub rho_mean: Option<f64>,
    pub timing: TimingStats,
    pub optimizer: OptimizerLog,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoverageSeries {
    pub series: String,
    pub rates: Vec<f64>,
    pub replications: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BenchmarkResult {
    pub config: BenchmarkConfig,
    pub grid: Vec<Vec<f64>>,
    pub truth: Vec<f64>,
    pub records: Vec<ReplicationRecord>,
    pub coverage: Vec<CoverageSeries>,
    pub summaries: Vec<SeriesSummary>,
}

fn mean_of(v: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let vals: Vec<f64> = v.flatten().collect();
    if vals.is_empty() { None } else { Some(mean(&vals)) }
}

impl BenchmarkResult {
    pub fn summary(&self, series: &str) -> Option<&SeriesSummary> {
        self.summaries.iter().find(|s| s.series == series)
    }

    pub fn series_records<'a>(&'a self, series: &'a str) -> impl Iterator<Item = &'a ReplicationRecord> + 'a {
        self.records.iter().filter(move |r| r.series == series)
    }

    pub fn coverage_of(&self, series: &str) -> Option<&CoverageSeries> {
        self.coverage.iter().find(|c| c.series == series)
    }

    /// Optimizer tallies summed over every record.
    pub fn optimizer_log(&self) -> OptimizerLog {
        let mut log = OptimizerLog::default();
        for r in &self.records {
            log.merge(r.optimizer);
        }
        log
    }

    /// Long-format `method,seed,metric,value` rows; timings are left out so
    /// the file is reproducible.
    pub fn write_results_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        w.write_record(["method", "seed", "metric", "value"]).map_err(csv_err)?;
        for r in &self.records {
            let seed = r.seed.to_string();
            let metrics: Vec<(&str, Option<f64>)> = if r.succeeded() {
                let cov = r.covered.iter().filter(|&&c| c).count() as f64 / r.covered.len().max(1) as f64;
                vec![("rmse", r.rmse), ("in_mse", r.in_mse), ("out_mse", r.out_mse), ("rho", r.rho), ("coverage", Some(cov))]
            } else {
                vec![("failed", Some(1.0))]
            };
            for (name, v) in metrics {
                if let Some(v) = v {
                    w.write_record([r.series.as_str(), &seed, name, &format!("{v}")]).map_err(csv_err)?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_coverage_csv(&self, path: &Path) -> Result<()> {
        let p = self.grid.first().map_or(1, Vec::len);
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        let mut header: Vec<String> = if p == 1 { vec!["x".into()] } else { (1..=p).map(|j| format!("x{j}")).collect() };
        header.extend(["method".into(), "rate".into()]);
        w.write_record(&header).map_err(csv_err)?;
        for c in &self.coverage {
            for (x, rate) in self.grid.iter().zip(&c.rates) {
                let mut row: Vec<String> = x.iter().map(|v| v.to_string()).collect();
                row.push(c.series.clone());
                row.push(rate.to_string());
                w.write_record(&row).map_err(csv_err)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_summary_json(&self, path: &Path) -> Result<()> {
        #[derive(Serialize)]
        struct Summary<'a> {
            config: &'a BenchmarkConfig,
            summaries: &'a [SeriesSummary],
            optimizer: OptimizerLog,
        }
        let s = Summary { config: &self.config, summaries: &self.summaries, optimizer: self.optimizer_log() };
        std::fs::write(path, serde_json::to_string_pretty(&s).map_err(|e| Error::Data(e.to_string()))?)?;
        Ok(())
    }

    /// Writes `results.csv`, `summary.json` and `coverage.csv` into `dir`.
    pub fn write_all(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        self.write_results_csv(&dir.join("results.csv"))?;
        self.write_summary_json(&dir.join("summary.json"))?;
        self.write_coverage_csv(&dir.join("coverage.csv"))
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Data(e.to_string())
}

struct Job<'a> {
    variant: &'a Variant,
    replication: usize,
}

fn run_job(config: &BenchmarkConfig, job: &Job<'_>, grid: &Covariates, truth: &[f64]) -> Vec<ReplicationRecord> {
    let seed = config.seed.wrapping_add(job.replication as u64);
    let record = |method: Method| ReplicationRecord {
        series: series_label(method, &job.variant.label),
        method,
        variant: job.variant.label.clone(),
        replication: job.replication,
        seed,
        error: None,
        rmse: None,
        in_mse: None,
        out_mse: None,
        rho: None,
        seconds: 0.0,
        optimizer: OptimizerLog::default(),
        covered: Vec::new(),
        predictions: Vec::new(),
    };
    let sim = match simulate(&job.variant.scenario, seed) {
        Ok(s) => s,
        Err(e) => {
            return config.methods.iter().map(|&m| ReplicationRecord { error: Some(e.to_string()), ..record(m) }).collect()
        }
    };
    let opts = config.cate_options(job.variant, seed);
    config
        .methods
        .iter()
        .map(|&m| {
            let mut rec = record(m);
            let start = Instant::now();
            let outcome = fit_method(m, &sim.rct, &sim.obs, &opts).and_then(|est| {
                let post = est.predict(grid, config.level)?;
                Ok((est.report().rho, est.optimizer_log(), post))
            });
            rec.seconds = start.elapsed().as_secs_f64();
            match outcome.and_then(|(rho, log, post)| {
                let pred: Vec<f64> = post.iter().map(|p| p.mean).collect();
                let support = SupportBox::from_sample(&sim.rct.x)?;
                let split = split_support_mse(&pred, truth, grid, &support)?;
                Ok((rho, log, post, rmse(&pred, truth)?, split, pred))
            }) {
                Ok((rho, log, post, err, split, pred)) => {
                    rec.rho = rho;
                    rec.optimizer = log;
                    rec.rmse = Some(err);
                    rec.in_mse = split.in_mse;
                    rec.out_mse = split.out_mse;
                    rec.covered = post.iter().zip(truth).map(|(p, &t)| p.contains(t)).collect();
                    rec.predictions = pred;
                }
                Err(e) => rec.error = Some(e.to_string()),
            }
            rec
        })
        .collect()
}

/// Runs every (sweep point, replication, method) combination using `jobs`
/// worker threads (`None` uses the global pool). Replication `r` simulates
/// with seed `config.seed + r`, so sweep points share data where the sweep
/// does not change the generator.
pub fn run_benchmark(config: &BenchmarkConfig, jobs: Option<usize>) -> Result<BenchmarkResult> {
    config.validate()?;
    let grid = eval_grid(&config.scenario, config.grid_size, config.seed)?;
    let truth = config.scenario.truth().tau_at(&grid);
    let variants = config.variants();
    let work: Vec<Job<'_>> = variants
        .iter()
        .flat_map(|v| (0..config.replications).map(move |r| Job { variant: v, replication: r }))
        .collect();
    let run = || work.par_iter().map(|j| run_job(config, j, &grid, &truth)).collect::<Vec<_>>();
    let batches = match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Validation(format!("cannot start {n} workers: {e}")))?
            .install(run),
        None => run(),
    };
    let mut records: Vec<ReplicationRecord> = batches.into_iter().flatten().collect();
    let order: BTreeMap<String, usize> = variants
        .iter()
        .flat_map(|v| config.methods.iter().map(move |&m| series_label(m, &v.label)))
        .enumerate()
        .map(|(i, s)| (s, i))
        .collect();
    records.sort_by_key(|r| (order[&r.series], r.seed));

    let mut coverage = Vec::new();
    let mut summaries = Vec::new();
    let mut series: Vec<(&String, &usize)> = order.iter().collect();
    series.sort_by_key(|(_, i)| **i);
    for (name, _) in series {
        let recs: Vec<&ReplicationRecord> = records.iter().filter(|r| &r.series == name).collect();
        let ok: Vec<&&ReplicationRecord> = recs.iter().filter(|r| r.succeeded()).collect();
        let rmses: Vec<f64> = ok.iter().filter_map(|r| r.rmse).collect();
        let rates = (!ok.is_empty()).then(|| {
            (0..truth.len())
                .map(|j| ok.iter().filter(|r| r.covered[j]).count() as f64 / ok.len() as f64)
                .collect::<Vec<f64>>()
        });
        let mut log = OptimizerLog::default();
        for r in &ok {
            log.merge(r.optimizer);
        }
        summaries.push(SeriesSummary {
            series: name.clone(),
            method: recs[0].method,
            variant: recs[0].variant.clone(),
            successes: ok.len(),
            failures: recs.len() - ok.len(),
            rmse_mean: if rmses.is_empty() { None } else { Some(mean(&rmses)) },
            rmse_sd: if rmses.is_empty() { None } else { Some(sample_sd(&rmses)) },
            in_mse_mean: mean_of(ok.iter().map(|r| r.in_mse)),
            out_mse_mean: mean_of(ok.iter().map(|r| r.out_mse)),
            mean_coverage: rates.as_ref().map(|r| mean(r)),
            rho_mean: mean_of(ok.iter().map(|r| r.rho)),
            timing: TimingStats::from_samples(&ok.iter().map(|r| r.seconds).collect::<Vec<_>>()),
            optimizer: log,
        });
        if let Some(rates) = rates {
            coverage.push(CoverageSeries { series: name.clone(), rates, replications: ok.len() });
        }
    }
    Ok(BenchmarkResult {
        config: config.clone(),
        grid: grid.rows().map(<[f64]>::to_vec).collect(),
        truth,
        records,
        coverage,
        summaries,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RuntimeRow {
    pub method: Method,
    pub repeats: usize,
    pub seconds: TimingStats,
}

/// Wall-clock fit-plus-predict timings on one fixed dataset (simulated
/// from `config.seed`), after one untimed warm-up fit per method.
pub fn runtime_bench(config: &BenchmarkConfig, repeats: usize) -> Result<Vec<RuntimeRow>> {
    config.validate()?;
    if repeats == 0 {
        return Err(Error::Validation("runtime benchmark needs at least one repeat".into()));
    }
    let sim = simulate(&config.scenario, config.seed)?;
    let grid = eval_grid(&config.scenario, config.grid_size, config.seed)?;
    let variant = &config.variants()[0];
    let opts = config.cate_options(variant, config.seed);
    let time_once = |m: Method| -> Result<f64> {
        let start = Instant::now();
        let est = fit_method(m, &sim.rct, &sim.obs, &opts)?;
        est.predict(&grid, config.level)?;
        Ok(start.elapsed().as_secs_f64())
    };
    config
        .methods
        .iter()
        .map(|&m| {
            time_once(m)?;
            let secs = (0..repeats).map(|_| time_once(m)).collect::<Result<Vec<_>>>()?;
            Ok(RuntimeRow { method: m, repeats, seconds: TimingStats::from_samples(&secs) })
        })
        .collect()
}
