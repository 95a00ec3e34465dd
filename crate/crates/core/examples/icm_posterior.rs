//! Two-task ICM posterior. The observational task is the experimental
//! function plus a bump; the joint posterior recovers `f^e`, `f^o` and the
//! bias `η = f^e − f^o` where the trial has no data.

use causal_icm::icm::{icm_fit, Task};
use causal_icm::{Covariates, KernelFamily, KernelSpec, Samples};

fn f(x: f64) -> f64 {
    (1.5 * x).sin()
}

fn bump(x: f64) -> f64 {
    0.8 * (-(x - 1.0) * (x - 1.0)).exp()
}

fn main() -> causal_icm::Result<()> {
    let xe: Vec<f64> = (0..8).map(|i| -2.0 + 0.25 * i as f64).collect();
    let xo: Vec<f64> = (0..30).map(|i| -3.0 + 0.2 * i as f64).collect();
    let rct = Samples::new(Covariates::from_column(&xe), xe.iter().map(|&x| f(x)).collect())?;
    let obs = Samples::new(Covariates::from_column(&xo), xo.iter().map(|&x| f(x) + bump(x)).collect())?;
    let kernel = KernelSpec::isotropic(KernelFamily::Rbf, 1, 0.8, 1.0)?;

    for rho in [0.0, 0.5, 0.9] {
        let model = icm_fit(rct.clone(), obs.clone(), rho, kernel.clone(), 0.01)?;
        println!("rho = {rho}  lml = {:.3}", model.log_marginal_likelihood());
        for x in [-1.0, 1.0, 2.5] {
            let e = model.posterior(&[x], Task::Experimental)?;
            let eta = model.posterior_eta(&[x])?;
            println!(
                "  x={x:+.1}  f_e {:+.3} ± {:.3} (truth {:+.3})   eta {:+.3} ± {:.3} (truth {:+.3})",
                e.mean,
                e.variance.sqrt(),
                f(x),
                eta.mean,
                eta.variance.sqrt(),
                -bump(x)
            );
        }
    }
    Ok(())
}
