//! Draws one replication of each benchmark scenario and writes the trial and
//! observational studies as CSV.

use causal_icm::io::write_dataset;
use causal_icm::simgen::{simulate, ScenarioId, SimScenario};

fn main() -> causal_icm::Result<()> {
    let dir = std::env::temp_dir().join("causal_icm_simulate");
    std::fs::create_dir_all(&dir)?;
    for id in [ScenarioId::Uni1, ScenarioId::Uni2, ScenarioId::Multi1, ScenarioId::Multi2] {
        let sim = simulate(&SimScenario::new(id), 0)?;
        let treated = |d: &causal_icm::Dataset| d.a.iter().filter(|&&a| a == 1).count();
        println!(
            "{:<7} dim {}  trial {:>4} ({} treated)  obs {:>4} ({} treated)",
            id.name(),
            id.dim(),
            sim.rct.len(),
            treated(&sim.rct),
            sim.obs.len(),
            treated(&sim.obs)
        );
        write_dataset(&dir.join(format!("{}_rct.csv", id.name())), &sim.rct)?;
        write_dataset(&dir.join(format!("{}_obs.csv", id.name())), &sim.obs)?;
    }
    println!("wrote {}", dir.display());
    Ok(())
}
