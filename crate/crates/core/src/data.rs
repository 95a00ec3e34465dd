//! Covariate matrices and study datasets.

use serde::{Deserialize, Serialize};

use crate::error::{dim_check, Error, Result};

/// Row-major `n × p` covariate matrix.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Covariates {
    data: Vec<f64>,
    nrows: usize,
    ncols: usize,
}

impl Covariates {
    pub fn from_row_major(nrows: usize, ncols: usize, data: Vec<f64>) -> Result<Self> {
        dim_check("covariate buffer length", nrows * ncols, data.len())?;
        Ok(Self { data, nrows, ncols })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let ncols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * ncols);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != ncols {
                return Err(Error::Dimension(format!(
                    "row {i} has {} columns, expected {ncols}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(Self { data, nrows: rows.len(), ncols })
    }

    /// Single-column matrix from a slice of scalars.
    pub fn from_column(values: &[f64]) -> Self {
        Self { data: values.to_vec(), nrows: values.len(), ncols: 1 }
    }

    /// Empty matrix with a fixed column count.
    pub fn empty(ncols: usize) -> Self {
        Self { data: Vec::new(), nrows: 0, ncols }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn is_empty(&self) -> bool {
        self.nrows == 0
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        (0..self.nrows).map(move |i| self.row(i))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.ncols + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Subset of rows, in the given order.
    pub fn select(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.ncols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Self { data, nrows: indices.len(), ncols: self.ncols }
    }

    /// Rows of `self` followed by rows of `other`.
    pub fn vstack(&self, other: &Self) -> Result<Self> {
        if self.nrows > 0 && other.nrows > 0 {
            dim_check("vstack column count", self.ncols, other.ncols)?;
        }
        let ncols = if self.nrows > 0 { self.ncols } else { other.ncols };
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Self { data, nrows: self.nrows + other.nrows, ncols })
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub(crate) fn map_rows(&self, mut f: impl FnMut(&[f64], &mut [f64])) -> Self {
        let mut data = vec![0.0; self.data.len()];
        for (i, out) in data.chunks_mut(self.ncols.max(1)).enumerate().take(self.nrows) {
            f(self.row(i), out);
        }
        Self { data, nrows: self.nrows, ncols: self.ncols }
    }
}

/// Inputs and outputs for one regression task: the `(X, y)` pair of a
/// single study restricted to a single treatment arm.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Samples {
    pub x: Covariates,
    pub y: Vec<f64>,
}

impl Samples {
    pub fn new(x: Covariates, y: Vec<f64>) -> Result<Self> {
        dim_check("outcome length", x.nrows(), y.len())?;
        Ok(Self { x, y })
    }

    pub fn empty(ncols: usize) -> Self {
        Self { x: Covariates::empty(ncols), y: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        Self { x: self.x.select(indices), y: indices.iter().map(|&i| self.y[i]).collect() }
    }

    pub fn concat(&self, other: &Self) -> Result<Self> {
        let x = self.x.vstack(&other.x)?;
        let mut y = self.y.clone();
        y.extend_from_slice(&other.y);
        Ok(Self { x, y })
    }
}

/// Which study a dataset comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Study {
    /// Randomized trial.
    Experimental,
    /// Observational study, possibly confounded.
    Observational,
}

impl Study {
    pub fn label(self) -> &'static str {
        match self {
            Study::Experimental => "experimental",
            Study::Observational => "observational",
        }
    }
}

/// Observed `(X, Y, A)` for one study.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub x: Covariates,
    pub y: Vec<f64>,
    pub a: Vec<u8>,
    pub study: Study,
}

impl Dataset {
    pub fn new(x: Covariates, y: Vec<f64>, a: Vec<u8>, study: Study) -> Result<Self> {
        dim_check("outcome length", x.nrows(), y.len())?;
        dim_check("treatment length", x.nrows(), a.len())?;
        if let Some(bad) = a.iter().find(|&&v| v > 1) {
            return Err(Error::Validation(format!("treatment indicator must be 0 or 1, got {bad}")));
        }
        Ok(Self { x, y, a, study })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    pub fn arm_indices(&self, arm: u8) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.a[i] == arm).collect()
    }

    /// Units with `A = arm`.
    pub fn arm(&self, arm: u8) -> Samples {
        let idx = self.arm_indices(arm);
        Samples { x: self.x.select(&idx), y: idx.iter().map(|&i| self.y[i]).collect() }
    }

    /// Like [`Dataset::arm`] but fails when the arm has no units.
    pub fn nonempty_arm(&self, arm: u8) -> Result<Samples> {
        let s = self.arm(arm);
        if s.is_empty() {
            return Err(Error::EmptyCell { study: self.study.label(), arm });
        }
        Ok(s)
    }
}
