//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use causal_icm::{Covariates, KernelFamily, KernelSpec, Samples};
use rand::Rng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

/// Closed-form stationary kernels, written out from their textbook forms.
pub fn kernel_value(family: KernelFamily, ls: &[f64], var: f64, a: &[f64], b: &[f64]) -> f64 {
    let r2: f64 = a.iter().zip(b).zip(ls).map(|((x, y), l)| ((x - y) / l).powi(2)).sum();
    let r = r2.sqrt();
    match family {
        KernelFamily::Rbf => var * (-0.5 * r2).exp(),
        KernelFamily::Matern32 => var * (1.0 + 3f64.sqrt() * r) * (-(3f64.sqrt()) * r).exp(),
        KernelFamily::Matern52 => var * (1.0 + 5f64.sqrt() * r + 5.0 * r2 / 3.0) * (-(5f64.sqrt()) * r).exp(),
    }
}

/// Gauss–Jordan inverse with partial pivoting.
pub fn invert(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, p);
        let d = a[c][c];
        for v in a[c].iter_mut() {
            *v /= d;
        }
        for r in 0..n {
            if r != c {
                let f = a[r][c];
                if f != 0.0 {
                    for k in 0..2 * n {
                        a[r][k] -= f * a[c][k];
                    }
                }
            }
        }
    }
    a.into_iter().map(|r| r[n..].to_vec()).collect()
}

#[derive(Clone, Debug)]
pub struct Instance {
    pub xe: Vec<Vec<f64>>,
    pub ye: Vec<f64>,
    pub xo: Vec<Vec<f64>>,
    pub yo: Vec<f64>,
    pub rho: f64,
    pub family: KernelFamily,
    pub ls: Vec<f64>,
    pub var: f64,
    pub noise: f64,
}

fn log_uniform(rng: &mut ChaCha20Rng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

/// Random small problem with `n_e ∈ [min_e, max_e]`, `n_o ∈ [0, max_o]`.
pub fn random_instance(rng: &mut ChaCha20Rng, min_e: usize, max_e: usize, max_o: usize) -> Instance {
    let p = rng.random_range(1..=3);
    let ne = rng.random_range(min_e..=max_e);
    let no = rng.random_range(0..=max_o);
    let mut pts = |n: usize| -> Vec<Vec<f64>> { (0..n).map(|_| (0..p).map(|_| rng.random_range(-2.0..2.0)).collect()).collect() };
    let xe = pts(ne);
    let xo = pts(no);
    let ye = (0..ne).map(|_| rng.sample(StandardNormal)).collect();
    let yo = (0..no).map(|_| rng.sample(StandardNormal)).collect();
    let rho = match rng.random_range(0..10) {
        0 => 0.0,
        1 => 1.0,
        _ => rng.random_range(0.0..1.0),
    };
    Instance {
        xe,
        ye,
        xo,
        yo,
        rho,
        family: KernelFamily::ALL[rng.random_range(0..3)],
        ls: (0..p).map(|_| log_uniform(rng, 0.3, 3.0)).collect(),
        var: log_uniform(rng, 0.5, 2.0),
        noise: log_uniform(rng, 0.01, 1.0),
    }
}

impl Instance {
    pub fn dim(&self) -> usize {
        self.ls.len()
    }

    pub fn kernel(&self) -> KernelSpec {
        KernelSpec::new(self.family, self.ls.clone(), self.var).unwrap()
    }

    fn samples(x: &[Vec<f64>], y: &[f64], p: usize) -> Samples {
        let cov = if x.is_empty() { Covariates::empty(p) } else { Covariates::from_rows(x).unwrap() };
        Samples::new(cov, y.to_vec()).unwrap()
    }

    pub fn experimental(&self) -> Samples {
        Self::samples(&self.xe, &self.ye, self.dim())
    }

    pub fn observational(&self) -> Samples {
        Self::samples(&self.xo, &self.yo, self.dim())
    }

    pub fn test_points(&self, rng: &mut ChaCha20Rng, m: usize) -> Vec<Vec<f64>> {
        (0..m).map(|_| (0..self.dim()).map(|_| rng.random_range(-3.0..3.0)).collect()).collect()
    }

    fn k(&self, a: &[f64], b: &[f64]) -> f64 {
        kernel_value(self.family, &self.ls, self.var, a, b)
    }
}

/// Joint posterior of `(f^e(x*), f^o(x*))` obtained by writing both tasks
/// as linear maps of two independent latent GPs `u1, u2`:
/// `f^e = u1`, `f^o = ρ·u1 + √(1−ρ²)·u2`, and conditioning the resulting
/// Gaussian on the noisy observations by explicit matrix inversion.
pub struct DensePosterior {
    pub mean: [f64; 2],
    pub cov: [[f64; 2]; 2],
}

impl DensePosterior {
    pub fn eta_mean(&self) -> f64 {
        self.mean[0] - self.mean[1]
    }

    pub fn eta_var(&self) -> f64 {
        self.cov[0][0] + self.cov[1][1] - 2.0 * self.cov[0][1]
    }
}

pub fn dense_posterior(inst: &Instance, xstar: &[f64]) -> DensePosterior {
    let alpha = [[1.0, 0.0], [inst.rho, (1.0 - inst.rho * inst.rho).max(0.0).sqrt()]];
    // Every evaluation: (input, task) with task 0 = experimental, 1 = observational.
    let mut evals: Vec<(&[f64], usize)> = Vec::new();
    evals.extend(inst.xe.iter().map(|x| (x.as_slice(), 0)));
    evals.extend(inst.xo.iter().map(|x| (x.as_slice(), 1)));
    let n = evals.len();
    evals.push((xstar, 0));
    evals.push((xstar, 1));
    let total = evals.len();
    // Cov(f_t(a), f_s(b)) = Σ_q α_t,q α_s,q k(a, b), from independence of u_q.
    let cov: Vec<Vec<f64>> = (0..total)
        .map(|i| {
            (0..total)
                .map(|j| {
                    let (a, t) = evals[i];
                    let (b, s) = evals[j];
                    let mix: f64 = (0..2).map(|q| alpha[t][q] * alpha[s][q]).sum();
                    mix * inst.k(a, b) + if i == j && i < n { inst.noise } else { 0.0 }
                })
                .collect()
        })
        .collect();
    let y: Vec<f64> = inst.ye.iter().chain(&inst.yo).copied().collect();
    if n == 0 {
        return DensePosterior {
            mean: [0.0, 0.0],
            cov: [[cov[0][0], cov[0][1]], [cov[1][0], cov[1][1]]],
        };
    }
    let syy: Vec<Vec<f64>> = cov[..n].iter().map(|r| r[..n].to_vec()).collect();
    let inv = invert(&syy);
    let mut mean = [0.0; 2];
    let mut post = [[0.0; 2]; 2];
    for a in 0..2 {
        let ka = &cov[n + a][..n];
        let w: Vec<f64> = (0..n).map(|j| (0..n).map(|i| ka[i] * inv[i][j]).sum()).collect();
        mean[a] = w.iter().zip(&y).map(|(w, y)| w * y).sum();
        for b in 0..2 {
            let kb = &cov[n + b][..n];
            post[a][b] = cov[n + a][n + b] - w.iter().zip(kb).map(|(w, k)| w * k).sum::<f64>();
        }
    }
    DensePosterior { mean, cov: post }
}

/// Single-task GP posterior `(mean, variance)` by explicit inversion.
pub fn dense_gp(inst: &Instance, x: &[Vec<f64>], y: &[f64], xstar: &[f64]) -> (f64, f64) {
    let n = x.len();
    let k: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| inst.k(&x[i], &x[j]) + if i == j { inst.noise } else { 0.0 }).collect())
        .collect();
    let inv = invert(&k);
    let ks: Vec<f64> = x.iter().map(|xi| inst.k(xi, xstar)).collect();
    let w: Vec<f64> = (0..n).map(|j| (0..n).map(|i| ks[i] * inv[i][j]).sum()).collect();
    let mean = w.iter().zip(y).map(|(w, y)| w * y).sum();
    let var = inst.k(xstar, xstar) - w.iter().zip(&ks).map(|(w, k)| w * k).sum::<f64>();
    (mean, var)
}

/// `log det` by Gaussian elimination with partial pivoting.
pub fn log_det(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    let mut a = m.to_vec();
    let mut acc = 0.0;
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, p);
        acc += a[c][c].abs().ln();
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
        }
    }
    acc
}

/// Gaussian log marginal likelihood of both studies under the latent
/// construction used by [`dense_posterior`].
pub fn dense_lml(inst: &Instance) -> f64 {
    let alpha = [[1.0, 0.0], [inst.rho, (1.0 - inst.rho * inst.rho).max(0.0).sqrt()]];
    let evals: Vec<(&[f64], usize)> =
        inst.xe.iter().map(|x| (x.as_slice(), 0)).chain(inst.xo.iter().map(|x| (x.as_slice(), 1))).collect();
    let n = evals.len();
    let s: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let mix: f64 = (0..2).map(|q| alpha[evals[i].1][q] * alpha[evals[j].1][q]).sum();
                    mix * inst.k(evals[i].0, evals[j].0) + if i == j { inst.noise } else { 0.0 }
                })
                .collect()
        })
        .collect();
    let y: Vec<f64> = inst.ye.iter().chain(&inst.yo).copied().collect();
    let inv = invert(&s);
    let quad: f64 = (0..n).map(|i| (0..n).map(|j| y[i] * inv[i][j] * y[j]).sum::<f64>()).sum();
    -0.5 * quad - 0.5 * log_det(&s) - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln()
}
