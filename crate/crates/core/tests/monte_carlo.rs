//! Repeated-simulation checks of estimator behaviour.

use causal_icm::cate::{
    fit_causal_icm_cate, fit_experimental_grounding, fit_method, fit_tlearner_gp, CateEstimator, CateOptions, Method,
    Preprocessing, RhoChoice,
};
use causal_icm::gp::Hyperparameters;
use causal_icm::harness::SupportBox;
use causal_icm::simgen::{simulate, ScenarioId, SimScenario};
use causal_icm::tuning::{tune_rho, TuneOptions, TuningMode};
use causal_icm::{Covariates, Dataset, KernelFamily, KernelSpec, Samples, Study};

fn hyper(l0: f64, l1: f64) -> [Hyperparameters; 2] {
    let h = |l| Hyperparameters { kernel: KernelSpec::isotropic(KernelFamily::Matern52, 1, l, 1.5).unwrap(), noise_variance: 0.4 };
    [h(l0), h(l1)]
}

fn relabel(d: &Dataset, study: Study) -> Dataset {
    Dataset::new(d.x.clone(), d.y.clone(), d.a.clone(), study).unwrap()
}

fn grid(lo: f64, hi: f64, n: usize) -> Covariates {
    Covariates::from_column(&(0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect::<Vec<_>>())
}

#[test]
fn rho_zero_equals_trial_only_learner() {
    for seed in 0..10 {
        let s = simulate(&SimScenario::new(ScenarioId::Uni2).with_sizes(400, 200), seed).unwrap();
        let opts = CateOptions { rho: RhoChoice::Fixed(0.0), fixed: Some(hyper(0.7, 1.1)), ..CateOptions::default() };
        let xs = grid(-2.0, 2.0, 21);
        let (mi, vi) = fit_method(Method::CausalIcm, &s.rct, &s.obs, &opts).unwrap().tau_moments(&xs).unwrap();
        let (mg, vg) = fit_method(Method::GpExp, &s.rct, &s.obs, &opts).unwrap().tau_moments(&xs).unwrap();
        for i in 0..xs.nrows() {
            assert!((mi[i] - mg[i]).abs() < 1e-10 && (vi[i] - vg[i]).abs() < 1e-10);
        }
    }
}

#[test]
fn rho_one_with_duplicated_trial_equals_pooled_learner() {
    for seed in 0..10 {
        let s = simulate(&SimScenario::new(ScenarioId::Uni1).with_sizes(300, 10), seed).unwrap();
        let obs = relabel(&s.rct, Study::Observational);
        let pre = Preprocessing::from_datasets(&[&s.rct, &obs]).unwrap();
        let opts = CateOptions {
            rho: RhoChoice::Fixed(1.0),
            fixed: Some(hyper(0.9, 0.6)),
            preprocessing: Some(pre),
            ..CateOptions::default()
        };
        let icm = fit_causal_icm_cate(&s.rct, &obs, &opts).unwrap();
        let pooled = Dataset::new(
            s.rct.x.vstack(&obs.x).unwrap(),
            [s.rct.y.clone(), obs.y.clone()].concat(),
            [s.rct.a.clone(), obs.a.clone()].concat(),
            Study::Experimental,
        )
        .unwrap();
        let t = fit_tlearner_gp(&pooled, &opts).unwrap();
        let xs = grid(-2.0, 2.0, 21);
        let (a, _) = icm.tau_moments(&xs).unwrap();
        let (b, _) = t.tau_moments(&xs).unwrap();
        for i in 0..xs.nrows() {
            assert!((a[i] - b[i]).abs() < 1e-6, "{} vs {}", a[i], b[i]);
        }
    }
}

#[test]
fn observational_learner_absorbs_confounding() {
    // The trial-free learner targets the observational contrast, which
    // exceeds τ by 2x in the first scenario.
    let xs = grid(-1.5, 1.5, 7);
    let truth = SimScenario::new(ScenarioId::Uni1).truth();
    let mut err = vec![0.0; xs.nrows()];
    let reps = 20;
    for seed in 0..reps {
        let s = simulate(&SimScenario::new(ScenarioId::Uni1), seed).unwrap();
        let (m, _) = fit_tlearner_gp(&s.obs, &CateOptions::default()).unwrap().tau_moments(&xs).unwrap();
        for (i, x) in xs.rows().enumerate() {
            err[i] += (m[i] - truth.tau(x)) / reps as f64;
        }
    }
    for (i, x) in xs.rows().enumerate() {
        assert!((err[i] - truth.eta(x)).abs() < 0.5, "x = {}: signed error {} vs eta {}", x[0], err[i], truth.eta(x));
    }
}

#[test]
fn grounding_bias_vanishes_without_confounding() {
    let reps = 20;
    let mut mean_theta = [0.0; 2];
    for seed in 0..reps {
        let trial = simulate(&SimScenario::new(ScenarioId::Uni1), seed).unwrap().rct;
        // A second randomized sample stands in for an unconfounded observational study.
        let clean = simulate(&SimScenario::new(ScenarioId::Uni1).with_sizes(2000, 1).with_selection_scale(0.0), 1000 + seed).unwrap();
        let obs = relabel(&clean.rct, Study::Observational);
        let eg = fit_experimental_grounding(&trial, &obs, &CateOptions::default()).unwrap();
        for j in 0..2 {
            mean_theta[j] += eg.bias_coefficients()[j] / reps as f64;
        }
    }
    assert!(mean_theta.iter().all(|t| t.abs() < 0.3), "{mean_theta:?}");
}

#[test]
fn tuning_prefers_strong_borrowing_for_unconfounded_copies() {
    let mut high = 0;
    let seeds = 10;
    for seed in 0..seeds {
        let s = simulate(&SimScenario::new(ScenarioId::Uni1).with_sizes(400, 10), seed).unwrap();
        let e = s.rct.arm(1);
        let o = Samples::new(e.x.clone(), e.y.clone()).unwrap();
        let opts = TuneOptions { mode: TuningMode::Fast, seed, ..TuneOptions::default() };
        if tune_rho(&e, &o, &opts).unwrap().chosen_rho >= 0.8 {
            high += 1;
        }
    }
    assert!(high * 10 >= seeds * 8, "{high} of {seeds}");
}

#[test]
fn tuning_on_nonlinear_scenario_settles_on_moderate_borrowing() {
    let mut counts = std::collections::BTreeMap::new();
    for seed in 0..20 {
        let s = simulate(&SimScenario::new(ScenarioId::Uni2), seed).unwrap();
        let opts = CateOptions { tuning_mode: TuningMode::Fast, seed, ..CateOptions::default() };
        let m = fit_causal_icm_cate(&s.rct, &s.obs, &opts).unwrap();
        *counts.entry((m.rho() * 10.0).round() as i64).or_insert(0) += 1;
    }
    let modal = counts.iter().max_by_key(|(k, c)| (**c, -**k)).map(|(k, _)| *k).unwrap();
    assert!((6..=9).contains(&modal), "{counts:?}");
}

#[test]
fn nonlinear_scenario_intervals_cover_inside_trial_support() {
    let xs = grid(-2.0, 2.0, 50);
    let truth = SimScenario::new(ScenarioId::Uni2).truth();
    let (mut hits, mut total) = (0usize, 0usize);
    for seed in 0..50 {
        let s = simulate(&SimScenario::new(ScenarioId::Uni2), 500 + seed).unwrap();
        let opts = CateOptions { tuning_mode: TuningMode::Fast, seed, ..CateOptions::default() };
        let post = fit_causal_icm_cate(&s.rct, &s.obs, &opts).unwrap().predict(&xs, 0.95).unwrap();
        let support = SupportBox::from_sample(&s.rct.x).unwrap();
        for (x, p) in xs.rows().zip(&post) {
            if support.contains(x) {
                total += 1;
                hits += p.contains(truth.tau(x)) as usize;
            }
        }
    }
    let rate = hits as f64 / total as f64;
    assert!(rate >= 0.90, "coverage {rate}");
}
