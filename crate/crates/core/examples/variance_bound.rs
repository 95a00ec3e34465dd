//! Borrowing strength never hurts and never helps more than `1 − ρ²`:
//! `(1−ρ²)·V_rct ≤ V ≤ V_rct` for the experimental posterior variance.

use causal_icm::icm::variance_bound_report;
use causal_icm::{Covariates, KernelFamily, KernelSpec, Samples};

fn main() -> causal_icm::Result<()> {
    let xe = [-1.0, -0.2, 0.5];
    let xo: Vec<f64> = (0..40).map(|i| -4.0 + 0.2 * i as f64).collect();
    let rct = Samples::new(Covariates::from_column(&xe), vec![0.3, -0.1, 0.4])?;
    let obs = Samples::new(Covariates::from_column(&xo), xo.iter().map(|x| x.cos()).collect())?;
    let kernel = KernelSpec::isotropic(KernelFamily::Matern32, 1, 1.0, 1.0)?;
    let test = Covariates::from_column(&[-3.0, 0.0, 3.0]);

    println!("{:>5} {:>6} {:>10} {:>10} {:>10}  holds", "rho", "x", "lower", "v_full", "v_rct");
    for rho in [0.0, 0.3, 0.6, 0.9, 1.0] {
        let records = variance_bound_report(&rct, &obs, rho, &kernel, 0.05, &test)?;
        for (i, r) in records.iter().enumerate() {
            println!(
                "{rho:>5.1} {:>6.1} {:>10.5} {:>10.5} {:>10.5}  {}",
                test.get(i, 0),
                r.lower,
                r.v_full,
                r.v_rct_only,
                r.holds_lower && r.holds_upper
            );
        }
    }
    Ok(())
}
