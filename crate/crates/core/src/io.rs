//! CSV files for datasets, test covariates and predictions.
//!
//! Training files carry the header `x1,…,xp,y,a`; test files need only the
//! `x` columns. Columns may appear in any order and extra columns are
//! ignored.

use std::path::Path;

use crate::cate::CatePosterior;
use crate::data::{Covariates, Dataset, Study};
use crate::error::{Error, Result};

fn open(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))
}

/// Positions of `x1..xp` in the header, with `p` the largest contiguous index.
fn covariate_columns(path: &Path, headers: &csv::StringRecord) -> Result<Vec<usize>> {
    let mut cols = Vec::new();
    loop {
        let name = format!("x{}", cols.len() + 1);
        match headers.iter().position(|h| h == name) {
            Some(i) => cols.push(i),
            None => break,
        }
    }
    if cols.is_empty() {
        return Err(Error::Data(format!("{}: missing column \"x1\"", path.display())));
    }
    Ok(cols)
}

fn column(path: &Path, headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::Data(format!("{}: missing column {name:?}", path.display())))
}

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

fn field(path: &Path, record: &csv::StringRecord, idx: usize, name: &str) -> Result<f64> {
    let raw = record.get(idx).unwrap_or("");
    raw.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
        Error::Data(format!("{}: line {}: column {name:?} holds {raw:?}, not a finite number", path.display(), line_of(record)))
    })
}

fn records(path: &Path, reader: &mut csv::Reader<std::fs::File>) -> Result<Vec<csv::StringRecord>> {
    reader
        .records()
        .map(|r| {
            r.map_err(|e| {
                let line = e.position().map_or(String::new(), |p| format!("line {}: ", p.line()));
                Error::Data(format!("{}: {line}{e}", path.display()))
            })
        })
        .collect()
}

pub fn read_covariates(path: &Path) -> Result<Covariates> {
    let mut reader = open(path)?;
    let headers = reader.headers().map_err(|e| Error::Data(format!("{}: {e}", path.display())))?.clone();
    let cols = covariate_columns(path, &headers)?;
    let mut data = Vec::new();
    let rows = records(path, &mut reader)?;
    for rec in &rows {
        for (j, &c) in cols.iter().enumerate() {
            data.push(field(path, rec, c, &format!("x{}", j + 1))?);
        }
    }
    Covariates::from_row_major(rows.len(), cols.len(), data)
}

pub fn read_dataset(path: &Path, study: Study) -> Result<Dataset> {
    let mut reader = open(path)?;
    let headers = reader.headers().map_err(|e| Error::Data(format!("{}: {e}", path.display())))?.clone();
    let cols = covariate_columns(path, &headers)?;
    let (yc, ac) = (column(path, &headers, "y")?, column(path, &headers, "a")?);
    let rows = records(path, &mut reader)?;
    let (mut data, mut y, mut a) = (Vec::new(), Vec::new(), Vec::new());
    for rec in &rows {
        for (j, &c) in cols.iter().enumerate() {
            data.push(field(path, rec, c, &format!("x{}", j + 1))?);
        }
        y.push(field(path, rec, yc, "y")?);
        a.push(match rec.get(ac).unwrap_or("") {
            "0" => 0,
            "1" => 1,
            other => {
                return Err(Error::Data(format!(
                    "{}: line {}: column \"a\" must be 0 or 1, got {other:?}",
                    path.display(),
                    line_of(rec)
                )))
            }
        });
    }
    Dataset::new(Covariates::from_row_major(rows.len(), cols.len(), data)?, y, a, study)
}

fn x_header(p: usize) -> Vec<String> {
    (1..=p).map(|j| format!("x{j}")).collect()
}

pub fn write_dataset(path: &Path, data: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(crate::harness::csv_err)?;
    let mut header = x_header(data.dim());
    header.extend(["y".into(), "a".into()]);
    w.write_record(&header).map_err(crate::harness::csv_err)?;
    for i in 0..data.len() {
        let mut row: Vec<String> = data.x.row(i).iter().map(f64::to_string).collect();
        row.push(data.y[i].to_string());
        row.push(data.a[i].to_string());
        w.write_record(&row).map_err(crate::harness::csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Rows `x1..xp,tau_mean,tau_var,ci_low,ci_high`.
pub fn write_predictions(path: &Path, xs: &Covariates, post: &[CatePosterior]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(crate::harness::csv_err)?;
    let mut header = x_header(xs.ncols());
    header.extend(["tau_mean", "tau_var", "ci_low", "ci_high"].map(String::from));
    w.write_record(&header).map_err(crate::harness::csv_err)?;
    for (x, p) in xs.rows().zip(post) {
        let mut row: Vec<String> = x.iter().map(f64::to_string).collect();
        row.extend([p.mean, p.variance, p.ci_low, p.ci_high].map(|v| v.to_string()));
        w.write_record(&row).map_err(crate::harness::csv_err)?;
    }
    w.flush()?;
    Ok(())
}
