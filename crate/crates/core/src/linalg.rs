//! Dense Cholesky factorization with a jitter ladder, backed by faer.

use faer::linalg::triangular_solve::{solve_lower_triangular_in_place, solve_upper_triangular_in_place};
use faer::{ColMut, Mat, MatRef, Par, Side};

use crate::error::{Error, Result};

/// Relative jitter levels tried, in order, after a plain factorization fails.
/// Each is multiplied by the mean diagonal of the matrix.
const JITTER_LADDER: [f64; 7] = [1e-10, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4];

/// Lower Cholesky factor `L` with `L Lᵀ = A + jitter·I`.
#[derive(Clone, Debug)]
pub struct Cholesky {
    l: Mat<f64>,
    jitter: f64,
}

impl Cholesky {
    /// Factors a symmetric matrix (only the lower triangle is read).
    pub fn factor(a: Mat<f64>) -> Result<Self> {
        let n = a.nrows();
        if n != a.ncols() {
            return Err(Error::Dimension(format!("cannot factor a {}x{} matrix", n, a.ncols())));
        }
        if n == 0 {
            return Ok(Self { l: a, jitter: 0.0 });
        }
        if let Ok(llt) = a.llt(Side::Lower) {
            return Ok(Self { l: lower_part(llt.L()), jitter: 0.0 });
        }
        let mean_diag = (0..n).map(|i| a[(i, i)]).sum::<f64>() / n as f64;
        let min_diag = (0..n).map(|i| a[(i, i)]).fold(f64::INFINITY, f64::min);
        let mut shifted = a;
        let mut applied = 0.0;
        for rel in JITTER_LADDER {
            let jitter = rel * mean_diag.abs().max(f64::MIN_POSITIVE);
            for i in 0..n {
                shifted[(i, i)] += jitter - applied;
            }
            applied = jitter;
            if let Ok(llt) = shifted.llt(Side::Lower) {
                return Ok(Self { l: lower_part(llt.L()), jitter });
            }
        }
        Err(Error::Numerical(format!(
            "Cholesky failed for {n}x{n} matrix (mean diagonal {mean_diag:.3e}, min diagonal \
             {min_diag:.3e}) even with jitter {applied:.3e}"
        )))
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    /// Jitter that had to be added to the diagonal (zero if none).
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn factor_ref(&self) -> MatRef<'_, f64> {
        self.l.as_ref()
    }

    /// Solves `L z = b` in place.
    pub fn forward_in_place(&self, b: &mut [f64]) {
        if b.is_empty() {
            return;
        }
        solve_lower_triangular_in_place(self.l.as_ref(), ColMut::from_slice_mut(b).as_mat_mut(), Par::Seq);
    }

    /// Solves `Lᵀ z = b` in place.
    pub fn backward_in_place(&self, b: &mut [f64]) {
        if b.is_empty() {
            return;
        }
        solve_upper_triangular_in_place(
            self.l.as_ref().transpose(),
            ColMut::from_slice_mut(b).as_mat_mut(),
            Par::Seq,
        );
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.forward_in_place(&mut x);
        self.backward_in_place(&mut x);
        x
    }

    /// `L⁻¹ B` for a block of right-hand sides.
    pub fn forward_mat(&self, mut b: Mat<f64>) -> Mat<f64> {
        if b.nrows() > 0 && b.ncols() > 0 {
            solve_lower_triangular_in_place(self.l.as_ref(), b.as_mut(), Par::Seq);
        }
        b
    }

    /// `Σ log L_ii`, i.e. half the log-determinant.
    pub fn half_log_det(&self) -> f64 {
        (0..self.dim()).map(|i| self.l[(i, i)].ln()).sum()
    }

    /// `L Lᵀ`, for checking the factorization.
    pub fn reconstruct(&self) -> Mat<f64> {
        &self.l * self.l.transpose()
    }
}

fn lower_part(l: MatRef<'_, f64>) -> Mat<f64> {
    Mat::from_fn(l.nrows(), l.ncols(), |i, j| if i >= j { l[(i, j)] } else { 0.0 })
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves a small symmetric positive definite system, adding `ridge` to the
/// diagonal if the plain system is singular.
pub(crate) fn solve_spd_with_ridge(a: &Mat<f64>, b: &[f64], ridge: f64) -> Result<Vec<f64>> {
    match a.llt(Side::Lower) {
        Ok(_) => Ok(Cholesky::factor(a.clone())?.solve(b)),
        Err(_) => {
            let n = a.nrows();
            let shifted = Mat::from_fn(n, n, |i, j| a[(i, j)] + if i == j { ridge } else { 0.0 });
            Ok(Cholesky::factor(shifted)?.solve(b))
        }
    }
}
