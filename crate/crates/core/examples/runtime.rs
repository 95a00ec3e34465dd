//! Wall-clock cost of each estimator as the observational sample grows.

use causal_icm::cate::Method;
use causal_icm::harness::{runtime_bench, BenchmarkConfig};
use causal_icm::simgen::{ScenarioId, SimScenario};
use causal_icm::tuning::TuningMode;

fn main() -> causal_icm::Result<()> {
    for n_obs in [100, 300, 600] {
        let config = BenchmarkConfig {
            methods: Method::ALL.to_vec(),
            tuning_mode: TuningMode::Fast,
            ..BenchmarkConfig::new(SimScenario::new(ScenarioId::Uni1).with_sizes(1000, n_obs))
        };
        for row in runtime_bench(&config, 2)? {
            println!(
                "n_obs {n_obs:>4}  {:<24} median {:.3}s  (min {:.3}s, max {:.3}s)",
                row.method.id(),
                row.seconds.median,
                row.seconds.min,
                row.seconds.max
            );
        }
    }
    Ok(())
}
