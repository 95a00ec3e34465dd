//! CATE estimation on a simulated trial plus confounded observational study.
//! Compares Causal-ICM with the two single-study GP T-learners and
//! experimental grounding on a grid.

use causal_icm::cate::{fit_method, CateOptions, Method};
use causal_icm::harness::rmse;
use causal_icm::simgen::{eval_grid, simulate, ScenarioId, SimScenario};
use causal_icm::tuning::TuningMode;

fn main() -> causal_icm::Result<()> {
    let scenario = SimScenario::new(ScenarioId::Uni1);
    let sim = simulate(&scenario, 7)?;
    let grid = eval_grid(&scenario, 40, 7)?;
    let tau = sim.truth.tau_at(&grid);
    println!("trial n={}, observational n={}", sim.rct.len(), sim.obs.len());

    let opts = CateOptions { seed: 7, tuning_mode: TuningMode::Fast, ..CateOptions::default() };
    for method in Method::ALL {
        let est = fit_method(method, &sim.rct, &sim.obs, &opts)?;
        let pred = est.predict(&grid, 0.95)?;
        let mean: Vec<f64> = pred.iter().map(|p| p.mean).collect();
        let covered = pred.iter().zip(&tau).filter(|(p, t)| p.contains(**t)).count();
        let rho = est.report().rho.map_or(String::from("-"), |r| format!("{r:.1}"));
        println!(
            "{:<24} rmse {:.3}  coverage {:>2}/{}  rho {rho}",
            method.id(),
            rmse(&mean, &tau)?,
            covered,
            tau.len()
        );
    }
    Ok(())
}
