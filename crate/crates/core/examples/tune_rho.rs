//! Cross-validated choice of `ρ` for one treatment arm of a simulated study,
//! with the held-out trial points reweighted by a study propensity model.

use causal_icm::simgen::{simulate, ScenarioId, SimScenario};
use causal_icm::tuning::{fit_study_propensity, propensity_weights, tune_rho_weighted, TuneOptions, TuningMode};

fn main() -> causal_icm::Result<()> {
    let sim = simulate(&SimScenario::new(ScenarioId::Uni2), 3)?;
    let (rct, obs) = (sim.rct.arm(1), sim.obs.arm(1));
    println!("treated arm: {} trial points, {} observational points", rct.len(), obs.len());

    let propensity = fit_study_propensity(&rct.x, &obs.x)?;
    let weights = propensity_weights(&propensity, &rct.x);
    let wmax = weights.iter().cloned().fold(0.0, f64::max);
    println!("propensity weights in [1, {wmax:.2}]");

    let opts = TuneOptions { mode: TuningMode::Fast, seed: 3, ..TuneOptions::default() };
    let sel = tune_rho_weighted(&rct, &obs, &weights, &opts)?;
    for (rho, loss) in sel.grid.iter().zip(&sel.losses) {
        let mark = if *rho == sel.chosen_rho { "  <- chosen" } else { "" };
        println!("rho {rho:.1}  weighted cv loss {loss:.4}{mark}");
    }
    println!("{} hyperparameter searches, {} ended below a start", sel.optimizer.fits, sel.optimizer.violations);
    Ok(())
}
