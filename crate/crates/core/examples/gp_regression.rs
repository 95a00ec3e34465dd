//! Single-task GP regression: fit a noisy sine, optimize hyperparameters by
//! marginal likelihood, and print the posterior on a few test inputs.

use causal_icm::gp::{gp_fit, gp_posterior, optimize_hyperparameters, HyperObjective, HyperOptions};
use causal_icm::{Covariates, KernelFamily, KernelSpec, Samples};

fn main() -> causal_icm::Result<()> {
    let xs: Vec<f64> = (0..25).map(|i| -3.0 + 0.25 * i as f64).collect();
    let ys: Vec<f64> = xs.iter().enumerate().map(|(i, x)| x.sin() + 0.05 * ((i * 7 % 5) as f64 - 2.0)).collect();
    let train = Samples::new(Covariates::from_column(&xs), ys)?;

    let fit = optimize_hyperparameters(HyperObjective::SingleTask(&train), KernelFamily::Rbf, &HyperOptions::default())?;
    let h = &fit.hyperparameters;
    println!(
        "lengthscale {:.3}, variance {:.3}, noise {:.4}, lml {:.3}",
        h.kernel.lengthscales()[0],
        h.kernel.variance(),
        h.noise_variance,
        fit.lml
    );

    let fixed = gp_fit(train.x.clone(), train.y.clone(), KernelSpec::isotropic(KernelFamily::Matern52, 1, 1.0, 1.0)?, 0.01)?;
    let tuned = gp_fit(train.x, train.y, h.kernel.clone(), h.noise_variance)?;
    let test = Covariates::from_column(&[-2.0, 0.0, 1.5, 4.0]);
    let (m_fixed, _) = gp_posterior(&fixed, &test)?;
    let (mean, var) = gp_posterior(&tuned, &test)?;
    for i in 0..test.nrows() {
        let x = test.get(i, 0);
        println!(
            "x={x:+.1}  sin={:+.3}  tuned {:+.3} ± {:.3}  matern52 {:+.3}",
            x.sin(),
            mean[i],
            var[i].sqrt(),
            m_fixed[i]
        );
    }
    Ok(())
}
