//! Datasets, CSV ingestion and standardization.
//!
//! Models in this crate never carry an intercept: the response is centered
//! and the predictors are centered and scaled, so restrictions and penalties
//! act on slope coefficients only.

use std::path::Path;

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

/// Divisor convention for the predictor standard deviation.
///
/// `N` (population form) is the default; `NMinusOne` matches R's `scale()`.
/// The choice changes the meaning of the tuning parameter, so callers that
/// compare against externally produced coefficients must pin it explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScaleDivisor {
    #[default]
    N,
    NMinusOne,
}

/// A response vector plus design matrix, rows are observations.
#[derive(Debug, Clone)]
pub struct Dataset {
    x: Array2<f64>,
    y: Array1<f64>,
    column_names: Option<Vec<String>>,
    standardized: bool,
}

/// Everything needed to undo a standardization exactly.
///
/// `x_scales` holds the factor each centered predictor column was multiplied
/// by (the reciprocal of the column standard deviation), so the forward map
/// is `x_std = (x - x_means) * x_scales` and `y_std = y - y_mean`.
#[derive(Debug, Clone)]
pub struct StandardizationRecord {
    pub x_means: Array1<f64>,
    pub x_scales: Array1<f64>,
    pub y_mean: f64,
}

impl StandardizationRecord {
    /// The record that maps standardized data back to the original scale.
    pub fn inverse(&self) -> StandardizationRecord {
        let x_means = -(&self.x_means * &self.x_scales);
        let x_scales = self.x_scales.mapv(|c| 1.0 / c);
        StandardizationRecord {
            x_means,
            x_scales,
            y_mean: -self.y_mean,
        }
    }
}

impl Dataset {
    pub fn new(x: Array2<f64>, y: Array1<f64>, column_names: Option<Vec<String>>) -> Result<Self> {
        let (n, p) = x.dim();
        if n < 2 {
            return Err(Error::InvalidData(format!(
                "need at least 2 observations, got {n}"
            )));
        }
        if p < 1 {
            return Err(Error::InvalidData("need at least 1 predictor".into()));
        }
        if y.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: y.len(),
                context: "response length vs design rows",
            });
        }
        if let Some(names) = &column_names {
            if names.len() != p {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    got: names.len(),
                    context: "column names vs design columns",
                });
            }
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("design matrix has non-finite entries".into()));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("response has non-finite entries".into()));
        }
        Ok(Self {
            x,
            y,
            column_names,
            standardized: false,
        })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &Array2<f64> {
        &self.x
    }

    pub fn y(&self) -> &Array1<f64> {
        &self.y
    }

    pub fn column_names(&self) -> Option<&[String]> {
        self.column_names.as_deref()
    }

    pub fn is_standardized(&self) -> bool {
        self.standardized
    }

    /// Name of column `j` (0-based), falling back to `x{j+1}`.
    pub fn column_name(&self, j: usize) -> String {
        match &self.column_names {
            Some(names) => names[j].clone(),
            None => format!("x{}", j + 1),
        }
    }

    /// Dataset restricted to the given observation rows, in order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Dataset> {
        let p = self.p();
        let mut x = Array2::<f64>::zeros((rows.len(), p));
        let mut y = Array1::<f64>::zeros(rows.len());
        for (i, &r) in rows.iter().enumerate() {
            x.row_mut(i).assign(&self.x.row(r));
            y[i] = self.y[r];
        }
        Dataset::new(x, y, self.column_names.clone())
    }
}

/// Load a dataset from a headered CSV file, extracting `response` as `y` and
/// keeping the remaining columns as the design matrix in file order.
pub fn load_csv(path: impl AsRef<Path>, response: &str) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .from_path(path.as_ref())?;
    let headers: Vec<String> = reader.headers()?.iter().map(|s| s.trim().to_string()).collect();
    let resp_idx = headers
        .iter()
        .position(|h| h == response)
        .ok_or_else(|| Error::ResponseColumnMissing(response.to_string()))?;
    let pred_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != resp_idx)
        .map(|(_, h)| h.clone())
        .collect();

    let mut y = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (row_idx, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != headers.len() {
            return Err(Error::InvalidData(format!(
                "row {} has {} fields, header has {}",
                row_idx + 1,
                record.len(),
                headers.len()
            )));
        }
        let mut row = Vec::with_capacity(headers.len() - 1);
        for (col_idx, field) in record.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| Error::NonNumericCell {
                row: row_idx + 1,
                column: headers[col_idx].clone(),
                value: field.to_string(),
            })?;
            if col_idx == resp_idx {
                y.push(v);
            } else {
                row.push(v);
            }
        }
        rows.push(row);
    }
    let n = rows.len();
    let p = headers.len() - 1;
    let mut x = Array2::<f64>::zeros((n, p));
    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row.into_iter().enumerate() {
            x[[i, j]] = v;
        }
    }
    Dataset::new(x, Array1::from(y), Some(pred_names))
}

/// Center the response and center/scale every predictor column, with the
/// population-sd divisor. See [`standardize_with`] for the divisor choice.
pub fn standardize(d: &Dataset) -> Result<(Dataset, StandardizationRecord)> {
    standardize_with(d, ScaleDivisor::N)
}

pub fn standardize_with(
    d: &Dataset,
    divisor: ScaleDivisor,
) -> Result<(Dataset, StandardizationRecord)> {
    if d.standardized {
        return Err(Error::InvalidData("dataset is already standardized".into()));
    }
    let n = d.n();
    let p = d.p();
    let nf = n as f64;
    let denom = match divisor {
        ScaleDivisor::N => nf,
        ScaleDivisor::NMinusOne => nf - 1.0,
    };

    let mut x_means = Array1::<f64>::zeros(p);
    let mut x_scales = Array1::<f64>::zeros(p);
    let mut x = d.x.clone();
    for j in 0..p {
        let mean = d.x.column(j).sum() / nf;
        let ss: f64 = d.x.column(j).iter().map(|v| (v - mean) * (v - mean)).sum();
        let sd = (ss / denom).sqrt();
        if sd == 0.0 {
            return Err(Error::ConstantColumn(d.column_name(j)));
        }
        let scale = 1.0 / sd;
        x_means[j] = mean;
        x_scales[j] = scale;
        for i in 0..n {
            x[[i, j]] = (x[[i, j]] - mean) * scale;
        }
    }
    let y_mean = d.y.sum() / nf;
    let y = &d.y - y_mean;

    let out = Dataset {
        x,
        y,
        column_names: d.column_names.clone(),
        standardized: true,
    };
    let record = StandardizationRecord {
        x_means,
        x_scales,
        y_mean,
    };
    Ok((out, record))
}

/// Invert a standardization, reproducing the original data.
pub fn destandardize(d: &Dataset, record: &StandardizationRecord) -> Result<Dataset> {
    let p = d.p();
    if record.x_means.len() != p || record.x_scales.len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: record.x_means.len(),
            context: "standardization record vs dataset columns",
        });
    }
    let mut x = d.x.clone();
    for j in 0..p {
        let m = record.x_means[j];
        let c = record.x_scales[j];
        for i in 0..d.n() {
            x[[i, j]] = x[[i, j]] / c + m;
        }
    }
    let y = &d.y + record.y_mean;
    Dataset::new(x, y, d.column_names.clone())
}
