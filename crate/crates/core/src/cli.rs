//! The `causal-icm` command-line tool.
//!
//! Exit status: 0 on success, 2 for usage, validation and file-format
//! errors, 3 for data-shape problems such as an empty (study, arm) cell,
//! and 4 for numerical failures.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::cate::{fit_causal_icm_cate, fit_method, CateOptions, Method, RhoChoice};
use crate::data::Study;
use crate::error::{Error, Result};
use crate::gp::Hyperparameters;
use crate::harness::{run_benchmark, runtime_bench, BenchmarkConfig};
use crate::io::{read_covariates, read_dataset, write_dataset, write_predictions};
use crate::kernels::KernelFamily;
use crate::simgen::{eval_grid, simulate, ScenarioId, SimScenario};
use crate::tuning::TuningMode;

pub const OUT_DIR_ENV: &str = "CAUSAL_ICM_OUT";

#[derive(Debug, Parser)]
#[command(name = "causal-icm", version, about = "Fuse a randomized trial with an observational study to estimate CATEs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a trial and an observational study from a simulation scenario.
    Simulate(SimulateArgs),
    /// Fit an estimator on two studies and predict the CATE at test points.
    FitPredict(FitPredictArgs),
    /// Cross-validate the borrowing parameter and report the losses.
    TuneRho(TuneRhoArgs),
    /// Run a replicated benchmark from a JSON config.
    Benchmark(BenchmarkArgs),
    /// Run a benchmark and keep only the coverage curves and summary.
    Coverage(BenchmarkArgs),
    /// Time fit plus predict per method on one simulated dataset.
    Runtime(RuntimeArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub scenario: ScenarioId,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1000)]
    pub pool_size: usize,
    #[arg(long, default_value_t = 1000)]
    pub n_obs: usize,
    #[arg(long, default_value_t = 1.0)]
    pub selection_scale: f64,
    /// Points of the evaluation grid stored in truth.json.
    #[arg(long, default_value_t = 50)]
    pub grid_size: usize,
    #[arg(long, env = OUT_DIR_ENV)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long)]
    pub rct: PathBuf,
    #[arg(long)]
    pub obs: PathBuf,
    #[arg(long, default_value = "rbf")]
    pub kernel: KernelFamily,
    /// Drives fold assignment during cross-validation.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    /// Comma-separated candidate values for the borrowing parameter.
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
    /// Reuse hyperparameters fitted once at rho = 0.5 inside cross-validation.
    #[arg(long)]
    pub fast_tuning: bool,
    /// JSON hyperparameters (standardized scale), either one object for both
    /// arms or `{"arm0": …, "arm1": …}`.
    #[arg(long)]
    pub hyperparams: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitPredictArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Covariates to predict at (`x1..xp` columns).
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long, default_value = "causal_icm")]
    pub method: Method,
    #[arg(long, conflicts_with = "auto_rho")]
    pub rho: Option<f64>,
    /// Choose rho by weighted cross-validation (the default when --rho is absent).
    #[arg(long)]
    pub auto_rho: bool,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    /// Predictions CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Fit report JSON; defaults to the predictions path with a
    /// `.report.json` extension.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TuneRhoArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// JSON output file; printed to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, env = OUT_DIR_ENV)]
    pub out: PathBuf,
    /// Worker threads; defaults to the number of logical cores.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RuntimeArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, env = OUT_DIR_ENV)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
}

/// Parses arguments, runs the subcommand and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: Command) -> Result<()> {
    match command {
        Command::Simulate(a) => cmd_simulate(&a),
        Command::FitPredict(a) => cmd_fit_predict(&a),
        Command::TuneRho(a) => cmd_tune_rho(&a),
        Command::Benchmark(a) => cmd_benchmark(&a, false),
        Command::Coverage(a) => cmd_benchmark(&a, true),
        Command::Runtime(a) => cmd_runtime(&a),
    }
}

#[derive(Serialize)]
struct TruthFile {
    scenario: SimScenario,
    seed: u64,
    grid: Vec<Vec<f64>>,
    tau: Vec<f64>,
    eta: Vec<f64>,
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<()> {
    let scenario = SimScenario { id: a.scenario, pool_size: a.pool_size, n_obs: a.n_obs, selection_scale: a.selection_scale };
    scenario.validate()?;
    std::fs::create_dir_all(&a.out).map_err(|e| io_context(&a.out, e))?;
    let sim = simulate(&scenario, a.seed)?;
    let grid = eval_grid(&scenario, a.grid_size, a.seed)?;
    write_dataset(&a.out.join("rct.csv"), &sim.rct)?;
    write_dataset(&a.out.join("obs.csv"), &sim.obs)?;
    let truth = TruthFile {
        tau: sim.truth.tau_at(&grid),
        eta: grid.rows().map(|x| sim.truth.eta(x)).collect(),
        grid: grid.rows().map(<[f64]>::to_vec).collect(),
        scenario,
        seed: a.seed,
    };
    write_json(&a.out.join("truth.json"), &truth)?;
    println!("wrote {} trial and {} observational rows to {}", sim.rct.len(), sim.obs.len(), a.out.display());
    Ok(())
}

fn io_context(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Data(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| io_context(path, e))
}

/// Reads JSON into `T`, reporting the JSON pointer of the offending field.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| io_context(path, e))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let pointer: String = e
            .path()
            .iter()
            .filter_map(|seg| match seg {
                serde_path_to_error::Segment::Seq { index } => Some(format!("/{index}")),
                serde_path_to_error::Segment::Map { key } => Some(format!("/{key}")),
                serde_path_to_error::Segment::Enum { variant } => Some(format!("/{variant}")),
                serde_path_to_error::Segment::Unknown => None,
            })
            .collect();
        let pointer = if pointer.is_empty() { "/".to_string() } else { pointer };
        Error::Validation(format!("{} at {pointer}: {}", path.display(), e.inner()))
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PerArm {
    arm0: Hyperparameters,
    arm1: Hyperparameters,
}

fn read_hyperparameters(path: &Path) -> Result<[Hyperparameters; 2]> {
    let text = std::fs::read_to_string(path).map_err(|e| io_context(path, e))?;
    let per_arm = serde_json::from_str::<serde_json::Value>(&text)
        .map(|v| v.get("arm0").is_some())
        .map_err(|e| Error::Validation(format!("{}: {e}", path.display())))?;
    if per_arm {
        let p: PerArm = read_json(path)?;
        Ok([p.arm0, p.arm1])
    } else {
        let h: Hyperparameters = read_json(path)?;
        Ok([h.clone(), h])
    }
}

fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::Validation(format!("input file {} does not exist", path.display())))
    }
}

fn require_parent(path: &Path) -> Result<()> {
    match path.parent().filter(|p| !p.as_os_str().is_empty()) {
        Some(dir) if !dir.is_dir() => {
            Err(Error::Validation(format!("output directory {} does not exist", dir.display())))
        }
        _ => Ok(()),
    }
}

fn cate_options(m: &ModelArgs, rho: RhoChoice) -> Result<CateOptions> {
    let mut opts = CateOptions {
        family: m.kernel,
        rho,
        seed: m.seed,
        folds: m.folds,
        tuning_mode: if m.fast_tuning { TuningMode::Fast } else { TuningMode::Full },
        ..CateOptions::default()
    };
    if let Some(g) = &m.grid {
        opts.rho_grid = g.clone();
    }
    if let Some(p) = &m.hyperparams {
        opts.fixed = Some(read_hyperparameters(p)?);
    }
    Ok(opts)
}

fn load_studies(m: &ModelArgs) -> Result<(crate::Dataset, crate::Dataset)> {
    require_file(&m.rct)?;
    require_file(&m.obs)?;
    Ok((read_dataset(&m.rct, Study::Experimental)?, read_dataset(&m.obs, Study::Observational)?))
}

pub fn cmd_fit_predict(a: &FitPredictArgs) -> Result<()> {
    require_file(&a.test)?;
    require_parent(&a.out)?;
    let report_path = a.report.clone().unwrap_or_else(|| a.out.with_extension("report.json"));
    require_parent(&report_path)?;
    crate::cate::z_quantile(a.level)?;
    let rho = match a.rho {
        Some(r) => RhoChoice::Fixed(r),
        None => RhoChoice::Auto,
    };
    let opts = cate_options(&a.model, rho)?;
    let (rct, obs) = load_studies(&a.model)?;
    let test = read_covariates(&a.test)?;
    crate::error::dim_check("test covariate columns", rct.dim(), test.ncols())?;
    let est = fit_method(a.method, &rct, &obs, &opts)?;
    let post = est.predict(&test, a.level)?;
    write_predictions(&a.out, &test, &post)?;
    let report = est.report();
    write_json(&report_path, &report)?;
    match report.rho {
        Some(r) => println!("{}: rho = {r}; wrote {} predictions", a.method, post.len()),
        None => println!("{}: wrote {} predictions", a.method, post.len()),
    }
    Ok(())
}

pub fn cmd_tune_rho(a: &TuneRhoArgs) -> Result<()> {
    if let Some(out) = &a.out {
        require_parent(out)?;
    }
    let opts = cate_options(&a.model, RhoChoice::Auto)?;
    let (rct, obs) = load_studies(&a.model)?;
    let model = fit_causal_icm_cate(&rct, &obs, &opts)?;
    let sel = model.rho_selection().ok_or_else(|| Error::Numerical("no rho selection recorded".into()))?;
    match &a.out {
        Some(out) => {
            write_json(out, sel)?;
            println!("chosen rho = {}", sel.chosen_rho);
        }
        None => println!("{}", serde_json::to_string_pretty(sel).map_err(|e| Error::Data(e.to_string()))?),
    }
    Ok(())
}

fn load_config(path: &Path) -> Result<BenchmarkConfig> {
    require_file(path)?;
    let cfg: BenchmarkConfig = read_json(path)?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn cmd_benchmark(a: &BenchmarkArgs, coverage_only: bool) -> Result<()> {
    let cfg = load_config(&a.config)?;
    std::fs::create_dir_all(&a.out).map_err(|e| io_context(&a.out, e))?;
    let result = run_benchmark(&cfg, a.jobs)?;
    if coverage_only {
        result.write_coverage_csv(&a.out.join("coverage.csv"))?;
        result.write_summary_json(&a.out.join("summary.json"))?;
    } else {
        result.write_all(&a.out)?;
    }
    println!("{:<40} {:>5} {:>10} {:>10} {:>9}", "series", "fails", "rmse", "sd", "coverage");
    for s in &result.summaries {
        let f = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.4}"));
        println!("{:<40} {:>5} {:>10} {:>10} {:>9}", s.series, s.failures, f(s.rmse_mean), f(s.rmse_sd), f(s.mean_coverage));
    }
    Ok(())
}

pub fn cmd_runtime(a: &RuntimeArgs) -> Result<()> {
    let cfg = load_config(&a.config)?;
    std::fs::create_dir_all(&a.out).map_err(|e| io_context(&a.out, e))?;
    let rows = runtime_bench(&cfg, a.repeats)?;
    write_json(&a.out.join("runtime.json"), &rows)?;
    let mut w = csv::Writer::from_path(a.out.join("runtime.csv")).map_err(crate::harness::csv_err)?;
    w.write_record(["method", "repeats", "mean", "sd", "median", "min", "max"]).map_err(crate::harness::csv_err)?;
    for r in &rows {
        let s = &r.seconds;
        let vals = [s.mean, s.sd, s.median, s.min, s.max].map(|v| v.to_string());
        let mut rec = vec![r.method.id().to_string(), r.repeats.to_string()];
        rec.extend(vals);
        w.write_record(&rec).map_err(crate::harness::csv_err)?;
        println!("{:<24} median {:.3}s  mean {:.3}s  sd {:.3}s", r.method.id(), s.median, s.mean, s.sd);
    }
    w.flush()?;
    Ok(())
}
