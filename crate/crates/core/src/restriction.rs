//! Linear equality restrictions `R b = r` encoding prior information.

use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::data::StandardizationRecord;
use crate::error::{Error, Result};
use crate::linalg;

/// Relative tolerance on the smallest/largest singular value ratio used to
/// validate full row rank.
pub const RANK_TOL: f64 = 1e-10;

/// Rows of a restriction that lose all support after column pruning are
/// dropped when their right-hand side is at most this.
pub const ZERO_ROW_RHS_TOL: f64 = 1e-10;

/// An `m x p` system of linear equality constraints with `m < p` and full
/// row rank.
#[derive(Debug, Clone)]
pub struct Restriction {
    matrix: Array2<f64>,
    rhs: Array1<f64>,
}

impl Restriction {
    pub fn new(matrix: Array2<f64>, rhs: Array1<f64>) -> Result<Self> {
        let (m, p) = matrix.dim();
        if m == 0 {
            return Err(Error::InvalidData("restriction needs at least one row".into()));
        }
        if m >= p {
            return Err(Error::InvalidData(format!(
                "restriction must have fewer rows than columns (m={m}, p={p})"
            )));
        }
        if rhs.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: rhs.len(),
                context: "restriction rhs vs rows",
            });
        }
        if matrix.iter().any(|v| !v.is_finite()) || rhs.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("restriction has non-finite entries".into()));
        }
        let (smin, smax) = linalg::row_singular_value_range(matrix.view());
        if smax == 0.0 || smin <= RANK_TOL * smax {
            let (_, dependent) = linalg::independent_rows(matrix.view(), RANK_TOL);
            return Err(Error::RankDeficient(format!(
                "smallest/largest singular value ratio {:.3e} below {RANK_TOL:.0e}; dependent rows (1-based): {:?}",
                if smax > 0.0 { smin / smax } else { 0.0 },
                dependent.iter().map(|i| i + 1).collect::<Vec<_>>()
            )));
        }
        Ok(Self { matrix, rhs })
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn rhs(&self) -> &Array1<f64> {
        &self.rhs
    }

    /// Number of constraint rows `m`.
    pub fn num_constraints(&self) -> usize {
        self.matrix.nrows()
    }

    /// Coefficient dimension `p` the restriction applies to.
    pub fn dim(&self) -> usize {
        self.matrix.ncols()
    }

    /// Max-norm constraint violation `||R b - r||_inf` at a given vector.
    pub fn violation(&self, beta: ArrayView1<'_, f64>) -> f64 {
        let resid = self.matrix.dot(&beta) - &self.rhs;
        resid.iter().fold(0.0, |a: f64, v| a.max(v.abs()))
    }

    /// Reduce the restriction to the given 0-based active columns.
    ///
    /// Columns outside `active` are dropped. Rows whose support was entirely
    /// on dropped columns are removed when their rhs is negligible and are an
    /// infeasibility error otherwise. The surviving rows are re-validated and
    /// numerically dependent ones removed. Returns `None` when nothing is
    /// left to enforce.
    pub fn reduce_to_columns(&self, active: &[usize]) -> Result<Option<ReducedRestriction>> {
        let m = self.num_constraints();
        let pa = active.len();
        let mut survivors: Vec<usize> = Vec::with_capacity(m);
        for i in 0..m {
            let has_support = active.iter().any(|&j| self.matrix[[i, j]] != 0.0);
            if has_support {
                survivors.push(i);
            } else if self.rhs[i].abs() > ZERO_ROW_RHS_TOL {
                return Err(Error::InfeasibleRestriction {
                    row: i + 1,
                    rhs: self.rhs[i],
                });
            }
        }
        if survivors.is_empty() || pa == 0 {
            return Ok(None);
        }
        let mut reduced = Array2::<f64>::zeros((survivors.len(), pa));
        for (ri, &i) in survivors.iter().enumerate() {
            for (cj, &j) in active.iter().enumerate() {
                reduced[[ri, cj]] = self.matrix[[i, j]];
            }
        }
        let (keep, _) = linalg::independent_rows(reduced.view(), RANK_TOL);
        if keep.is_empty() {
            return Ok(None);
        }
        let mut matrix = Array2::<f64>::zeros((keep.len(), pa));
        let mut rhs = Array1::<f64>::zeros(keep.len());
        let mut source_rows = Vec::with_capacity(keep.len());
        for (ri, &k) in keep.iter().enumerate() {
            matrix.row_mut(ri).assign(&reduced.row(k));
            rhs[ri] = self.rhs[survivors[k]];
            source_rows.push(survivors[k]);
        }
        Ok(Some(ReducedRestriction {
            matrix,
            rhs,
            source_rows,
        }))
    }
}

/// A restriction projected onto an active column set; may have as many rows
/// as columns (fully determined system), unlike [`Restriction`].
#[derive(Debug, Clone)]
pub struct ReducedRestriction {
    pub matrix: Array2<f64>,
    pub rhs: Array1<f64>,
    /// 0-based indices of the originating rows in the full restriction.
    pub source_rows: Vec<usize>,
}

/// Selector restriction forcing the given 1-based coefficients to zero.
pub fn restriction_zeros(indices: &[usize], p: usize) -> Result<Restriction> {
    if indices.is_empty() {
        return Err(Error::InvalidData("no indices given".into()));
    }
    let mut sorted: Vec<usize> = indices.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    for &i in &sorted {
        if i == 0 || i > p {
            return Err(Error::InvalidParameter(format!(
                "zero index {i} out of range 1..={p}"
            )));
        }
    }
    if sorted.len() >= p {
        return Err(Error::InvalidData(format!(
            "cannot zero all {p} coefficients"
        )));
    }
    let m = sorted.len();
    let mut matrix = Array2::<f64>::zeros((m, p));
    for (row, &i) in sorted.iter().enumerate() {
        matrix[[row, i - 1]] = 1.0;
    }
    Restriction::new(matrix, Array1::zeros(m))
}

/// Stack general affine rows `(weights, value)` into a restriction.
pub fn restriction_affine(rows: &[(Vec<f64>, f64)]) -> Result<Restriction> {
    if rows.is_empty() {
        return Err(Error::InvalidData("no restriction rows given".into()));
    }
    let p = rows[0].0.len();
    for (i, (w, _)) in rows.iter().enumerate() {
        if w.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: w.len(),
                context: "restriction row lengths",
            });
        }
        let _ = i;
    }
    let m = rows.len();
    let mut matrix = Array2::<f64>::zeros((m, p));
    let mut rhs = Array1::<f64>::zeros(m);
    for (i, (w, v)) in rows.iter().enumerate() {
        for (j, &wj) in w.iter().enumerate() {
            matrix[[i, j]] = wj;
        }
        rhs[i] = *v;
    }
    Restriction::new(matrix, rhs)
}

/// Carry an original-scale restriction onto the standardized modeling scale.
///
/// A standardized coefficient relates to its original-scale counterpart
/// through the column scale factor, so the transported matrix is
/// `R'[k,j] = R[k,j] * x_scales[j]` with the right-hand side unchanged
/// (centering never enters slope restrictions).
pub fn transform_restriction(
    rest: &Restriction,
    record: &StandardizationRecord,
) -> Result<Restriction> {
    let p = rest.dim();
    if record.x_scales.len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: record.x_scales.len(),
            context: "standardization record vs restriction columns",
        });
    }
    let mut matrix = rest.matrix.clone();
    for j in 0..p {
        let c = record.x_scales[j];
        for i in 0..rest.num_constraints() {
            matrix[[i, j]] *= c;
        }
    }
    Restriction::new(matrix, rest.rhs.clone())
}

/// On-disk restriction description: either explicit rows and values, or a
/// zero-selector given by 1-based indices.
#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RestrictionFile {
    Rows {
        rows: Vec<Vec<f64>>,
        values: Vec<f64>,
    },
    Zeros {
        zero_indices: Vec<usize>,
        p: usize,
    },
}

impl RestrictionFile {
    pub fn into_restriction(self) -> Result<Restriction> {
        match self {
            RestrictionFile::Rows { rows, values } => {
                if rows.len() != values.len() {
                    return Err(Error::DimensionMismatch {
                        expected: rows.len(),
                        got: values.len(),
                        context: "restriction rows vs values",
                    });
                }
                let pairs: Vec<(Vec<f64>, f64)> =
                    rows.into_iter().zip(values).collect();
                restriction_affine(&pairs)
            }
            RestrictionFile::Zeros { zero_indices, p } => restriction_zeros(&zero_indices, p),
        }
    }
}

/// Load a restriction from its JSON file format.
pub fn load_restriction(path: impl AsRef<Path>) -> Result<Restriction> {
    let text = std::fs::read_to_string(path.as_ref())?;
    let file: RestrictionFile = serde_json::from_str(&text)?;
    file.into_restriction()
}
