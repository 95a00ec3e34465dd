//! Stationary covariance functions with ARD lengthscales.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::data::Covariates;
use crate::error::{dim_check, Error, Result};

const SQRT_3: f64 = 1.732_050_807_568_877_2;
const SQRT_5: f64 = 2.236_067_977_499_79;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    #[default]
    Rbf,
    Matern32,
    Matern52,
}

impl KernelFamily {
    pub const ALL: [KernelFamily; 3] = [KernelFamily::Rbf, KernelFamily::Matern32, KernelFamily::Matern52];

    /// Unit-variance radial profile as a function of the squared scaled distance.
    #[inline]
    pub fn profile(self, r2: f64) -> f64 {
        match self {
            KernelFamily::Rbf => (-0.5 * r2).exp(),
            KernelFamily::Matern32 => {
                let s = SQRT_3 * r2.sqrt();
                (1.0 + s) * (-s).exp()
            }
            KernelFamily::Matern52 => {
                let r = r2.sqrt();
                let s = SQRT_5 * r;
                (1.0 + s + 5.0 * r2 / 3.0) * (-s).exp()
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            KernelFamily::Rbf => "rbf",
            KernelFamily::Matern32 => "matern32",
            KernelFamily::Matern52 => "matern52",
        }
    }
}

impl std::str::FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rbf" => Ok(KernelFamily::Rbf),
            "matern32" => Ok(KernelFamily::Matern32),
            "matern52" => Ok(KernelFamily::Matern52),
            other => Err(Error::Validation(format!("unknown kernel family {other:?}"))),
        }
    }
}

impl std::fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A kernel family together with its hyperparameters.
///
/// `k(x, x') = variance · g(r)` with `r² = Σ_d (x_d − x'_d)² / ℓ_d²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawKernelSpec")]
pub struct KernelSpec {
    pub(crate) family: KernelFamily,
    pub(crate) lengthscales: Vec<f64>,
    pub(crate) variance: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawKernelSpec {
    family: KernelFamily,
    lengthscales: Vec<f64>,
    variance: f64,
}

impl TryFrom<RawKernelSpec> for KernelSpec {
    type Error = Error;

    fn try_from(raw: RawKernelSpec) -> Result<Self> {
        KernelSpec::new(raw.family, raw.lengthscales, raw.variance)
    }
}

impl KernelSpec {
    pub fn new(family: KernelFamily, lengthscales: Vec<f64>, variance: f64) -> Result<Self> {
        if lengthscales.is_empty() {
            return Err(Error::Validation("kernel needs at least one lengthscale".into()));
        }
        if let Some(l) = lengthscales.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(Error::Validation(format!("lengthscale must be positive, got {l}")));
        }
        if !(variance.is_finite() && variance > 0.0) {
            return Err(Error::Validation(format!("kernel variance must be positive, got {variance}")));
        }
        Ok(Self { family, lengthscales, variance })
    }

    /// Same lengthscale in every dimension.
    pub fn isotropic(family: KernelFamily, dim: usize, lengthscale: f64, variance: f64) -> Result<Self> {
        Self::new(family, vec![lengthscale; dim], variance)
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn lengthscales(&self) -> &[f64] {
        &self.lengthscales
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    #[inline]
    pub(crate) fn scaled_sq_dist(&self, x: &[f64], z: &[f64]) -> f64 {
        x.iter()
            .zip(z)
            .zip(&self.lengthscales)
            .map(|((a, b), l)| {
                let d = (a - b) / l;
                d * d
            })
            .sum()
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[f64], z: &[f64]) -> f64 {
        self.variance * self.family.profile(self.scaled_sq_dist(x, z))
    }

    pub fn eval(&self, x: &[f64], z: &[f64]) -> Result<f64> {
        dim_check("first kernel argument", self.dim(), x.len())?;
        dim_check("second kernel argument", self.dim(), z.len())?;
        Ok(self.eval_unchecked(x, z))
    }
}

pub fn eval_kernel(spec: &KernelSpec, x: &[f64], z: &[f64]) -> Result<f64> {
    spec.eval(x, z)
}

/// Cross-covariance `K(A, B)` with entry `(i, j) = k(A_i, B_j)`.
pub fn kernel_matrix(spec: &KernelSpec, a: &Covariates, b: &Covariates) -> Result<Mat<f64>> {
    if a.nrows() > 0 {
        dim_check("left covariate columns", spec.dim(), a.ncols())?;
    }
    if b.nrows() > 0 {
        dim_check("right covariate columns", spec.dim(), b.ncols())?;
    }
    Ok(Mat::from_fn(a.nrows(), b.nrows(), |i, j| spec.eval_unchecked(a.row(i), b.row(j))))
}

/// Per-dimension squared differences between all pairs of training rows,
/// computed once so that covariance matrices for many hyperparameter values
/// only cost a scaled sum and one profile evaluation per entry.
pub(crate) struct PairwiseCache {
    n: usize,
    // diffs[d] holds the strictly-lower triangle, column by column.
    diffs: Vec<Vec<f64>>,
    tasks: Vec<u8>,
}

impl PairwiseCache {
    /// `tasks[i]` is 0 or 1 and selects the coregionalization block of row `i`.
    pub(crate) fn new(x: &Covariates, tasks: Vec<u8>) -> Self {
        let n = x.nrows();
        let p = x.ncols();
        let mut diffs = vec![Vec::with_capacity(n * n.saturating_sub(1) / 2); p];
        for (d, out) in diffs.iter_mut().enumerate() {
            for j in 0..n {
                let xj = x.get(j, d);
                for i in j + 1..n {
                    let t = x.get(i, d) - xj;
                    out.push(t * t);
                }
            }
        }
        Self { n, diffs, tasks }
    }

    /// `[coef[t_i][t_j] · k(x_i, x_j)] + noise·I`. Only the lower triangle is
    /// filled unless `full` is set.
    pub(crate) fn covariance(&self, kernel: &KernelSpec, coef: [[f64; 2]; 2], noise: f64, full: bool) -> Mat<f64> {
        let n = self.n;
        let mut out = Mat::<f64>::zeros(n, n);
        let inv_l2: Vec<f64> = kernel.lengthscales.iter().map(|l| 1.0 / (l * l)).collect();
        let mut r2 = vec![0.0; n];
        let mut offset = 0;
        for j in 0..n {
            let len = n - j - 1;
            let r2 = &mut r2[..len];
            r2.fill(0.0);
            for (d, diffs) in self.diffs.iter().enumerate() {
                let w = inv_l2[d];
                for (acc, v) in r2.iter_mut().zip(&diffs[offset..offset + len]) {
                    *acc += w * v;
                }
            }
            let tj = self.tasks[j] as usize;
            out[(j, j)] = coef[tj][tj] * kernel.variance + noise;
            for (k, &r) in r2.iter().enumerate() {
                let i = j + 1 + k;
                let ti = self.tasks[i] as usize;
                out[(i, j)] = coef[ti][tj] * kernel.variance * kernel.family.profile(r);
            }
            offset += len;
        }
        if full {
            for j in 0..n {
                for i in j + 1..n {
                    out[(j, i)] = out[(i, j)];
                }
            }
        }
        out
    }
}


#[cfg(test)]
mod tests {
    use super::*;
    use faer::Side;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn rbf1() -> KernelSpec {
        KernelSpec::isotropic(KernelFamily::Rbf, 1, 1.0, 1.0).unwrap()
    }

    #[test]
    fn zero_distance_returns_variance() {
        assert_eq!(eval_kernel(&rbf1(), &[0.0], &[0.0]).unwrap(), 1.0);
        let m = KernelSpec::isotropic(KernelFamily::Matern32, 2, 0.7, 2.5).unwrap();
        assert_eq!(m.eval(&[0.3, -1.0], &[0.3, -1.0]).unwrap(), 2.5);
        let m = KernelSpec::isotropic(KernelFamily::Matern52, 2, 0.7, 2.5).unwrap();
        assert_eq!(m.eval(&[0.3, -1.0], &[0.3, -1.0]).unwrap(), 2.5);
    }

    #[test]
    fn closed_form_profiles() {
        // exp(-1/2) computed independently of the implementation.
        assert!((eval_kernel(&rbf1(), &[0.0], &[1.0]).unwrap() - 0.606_530_659_712_633_4).abs() < 1e-15);
        let r = 1.3f64;
        let m32 = KernelSpec::isotropic(KernelFamily::Matern32, 1, 1.0, 1.0).unwrap();
        let want = (1.0 + 3f64.sqrt() * r) * (-(3f64.sqrt()) * r).exp();
        assert!((m32.eval(&[0.0], &[r]).unwrap() - want).abs() < 1e-15);
        let m52 = KernelSpec::isotropic(KernelFamily::Matern52, 1, 2.0, 3.0).unwrap();
        let s = r / 2.0;
        let want = 3.0 * (1.0 + 5f64.sqrt() * s + 5.0 * s * s / 3.0) * (-(5f64.sqrt()) * s).exp();
        assert!((m52.eval(&[r], &[0.0]).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn two_point_matrix() {
        let x = Covariates::from_column(&[0.0, 1.0]);
        let k = kernel_matrix(&rbf1(), &x, &x).unwrap();
        let e = (-0.5f64).exp();
        assert_eq!(k[(0, 0)], 1.0);
        assert_eq!(k[(1, 1)], 1.0);
        assert!((k[(0, 1)] - e).abs() < 1e-15 && (k[(1, 0)] - e).abs() < 1e-15);
        let one = kernel_matrix(&rbf1(), &Covariates::from_column(&[0.4]), &Covariates::from_column(&[0.4])).unwrap();
        assert_eq!((one.nrows(), one.ncols(), one[(0, 0)]), (1, 1, 1.0));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(eval_kernel(&rbf1(), &[0.0, 1.0], &[0.0]), Err(Error::Dimension(_))));
        assert!(matches!(KernelSpec::new(KernelFamily::Rbf, vec![0.0], 1.0), Err(Error::Validation(_))));
        assert!(matches!(KernelSpec::new(KernelFamily::Rbf, vec![1.0], -1.0), Err(Error::Validation(_))));
        let x = Covariates::from_rows(&[[0.0, 1.0]]).unwrap();
        assert!(kernel_matrix(&rbf1(), &x, &x).is_err());
    }

    #[test]
    fn json_round_trip_and_validation() {
        let spec = KernelSpec::new(KernelFamily::Matern52, vec![0.5, 2.0], 1.5).unwrap();
        let s = serde_json::to_string(&spec).unwrap();
        assert_eq!(s, r#"{"family":"matern52","lengthscales":[0.5,2.0],"variance":1.5}"#);
        assert_eq!(serde_json::from_str::<KernelSpec>(&s).unwrap(), spec);
        assert!(serde_json::from_str::<KernelSpec>(r#"{"family":"rbf","lengthscales":[-1],"variance":1}"#).is_err());
        assert!(serde_json::from_str::<KernelSpec>(r#"{"family":"cosine","lengthscales":[1],"variance":1}"#).is_err());
    }

    #[test]
    fn self_matrices_are_psd() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        for family in KernelFamily::ALL {
            for _ in 0..20 {
                let n = rng.random_range(1..=50);
                let p = rng.random_range(1..=4);
                let rows: Vec<Vec<f64>> =
                    (0..n).map(|_| (0..p).map(|_| rng.random_range(-3.0..3.0)).collect()).collect();
                let x = Covariates::from_rows(&rows).unwrap();
                let ls = (0..p).map(|_| rng.random_range(0.1..3.0)).collect();
                let spec = KernelSpec::new(family, ls, rng.random_range(0.1..5.0)).unwrap();
                let k = kernel_matrix(&spec, &x, &x).unwrap();
                let sym = Mat::from_fn(n, n, |i, j| 0.5 * (k[(i, j)] + k[(j, i)]));
                let eig = sym.self_adjoint_eigenvalues(Side::Lower).unwrap();
                assert!(eig[0] >= -1e-10, "{family}: min eigenvalue {}", eig[0]);
                for i in 0..n {
                    assert_eq!(k[(i, i)], spec.variance);
                }
            }
        }
    }

    #[test]
    fn cache_matches_direct_construction() {
        let x = Covariates::from_rows(&[[0.0, 1.0], [0.5, -1.0], [2.0, 0.3], [-1.0, -1.0]]).unwrap();
        let spec = KernelSpec::new(KernelFamily::Matern32, vec![0.8, 1.7], 1.3).unwrap();
        let tasks = vec![0, 1, 0, 1];
        let coef = [[1.0, 0.4], [0.4, 1.0]];
        let sigma = PairwiseCache::new(&x, tasks.clone()).covariance(&spec, coef, 0.2, true);
        for i in 0..4 {
            for j in 0..4 {
                let want = coef[tasks[i] as usize][tasks[j] as usize] * spec.eval(x.row(i), x.row(j)).unwrap()
                    + if i == j { 0.2 } else { 0.0 };
                assert!((sigma[(i, j)] - want).abs() < 1e-14);
            }
        }
    }

    fn family_strategy() -> impl Strategy<Value = KernelFamily> {
        prop_oneof![Just(KernelFamily::Rbf), Just(KernelFamily::Matern32), Just(KernelFamily::Matern52)]
    }

    proptest! {
        #[test]
        fn symmetric_and_stationary(
            family in family_strategy(),
            x in prop::collection::vec(-5.0f64..5.0, 3),
            z in prop::collection::vec(-5.0f64..5.0, 3),
            shift in prop::collection::vec(-5.0f64..5.0, 3),
            ls in prop::collection::vec(0.05f64..5.0, 3),
            var in 0.01f64..10.0,
        ) {
            let spec = KernelSpec::new(family, ls, var).unwrap();
            let k = spec.eval(&x, &z).unwrap();
            prop_assert_eq!(k, spec.eval(&z, &x).unwrap());
            let xs: Vec<f64> = x.iter().zip(&shift).map(|(a, b)| a + b).collect();
            let zs: Vec<f64> = z.iter().zip(&shift).map(|(a, b)| a + b).collect();
            prop_assert!((spec.eval(&xs, &zs).unwrap() - k).abs() <= 1e-12 * var);
            prop_assert!(k <= var && k >= 0.0);
        }

        #[test]
        fn profile_non_increasing(family in family_strategy(), r in 0.0f64..20.0, dr in 0.0f64..5.0) {
            prop_assert!(family.profile((r + dr) * (r + dr)) <= family.profile(r * r));
        }
    }
}
