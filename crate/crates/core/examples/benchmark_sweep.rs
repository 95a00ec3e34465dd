//! A small replicated benchmark: Causal-ICM at fixed values of `ρ` on the
//! nonlinear scenario, written out as results, coverage and summary files.

use causal_icm::cate::Method;
use causal_icm::harness::{run_benchmark, BenchmarkConfig, Sweep};
use causal_icm::simgen::{ScenarioId, SimScenario};
use causal_icm::tuning::TuningMode;

fn main() -> causal_icm::Result<()> {
    let config = BenchmarkConfig {
        methods: vec![Method::CausalIcm],
        replications: 3,
        grid_size: 30,
        tuning_mode: TuningMode::Fast,
        sweep: Some(Sweep::RhoGrid(vec![0.0, 0.5, 0.8])),
        ..BenchmarkConfig::new(SimScenario::new(ScenarioId::Uni2))
    };
    let result = run_benchmark(&config, None)?;
    for s in &result.summaries {
        println!(
            "{:<22} rmse {:.3}  in-support mse {:.3}  out-of-support mse {:.3}",
            s.series,
            s.rmse_mean.unwrap_or(f64::NAN),
            s.in_mse_mean.unwrap_or(f64::NAN),
            s.out_mse_mean.unwrap_or(f64::NAN)
        );
    }
    let dir = std::env::temp_dir().join("causal_icm_benchmark");
    result.write_all(&dir)?;
    println!("wrote {}", dir.display());
    Ok(())
}
