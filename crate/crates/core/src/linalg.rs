//! Small dense linear algebra kernels: Cholesky and LU solves, symmetric
//! eigenvalues, row-independence detection.
//!
//! The systems in this crate are symmetric positive definite (gram matrices
//! plus nonnegative diagonals) and small enough that unblocked factorizations
//! are the right tool. LU with partial pivoting is kept separate so that
//! verification code can solve indefinite KKT systems through a route that
//! shares nothing with the Cholesky path.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: Array2<f64>,
}

impl Cholesky {
    /// Factor a symmetric positive definite matrix. Returns `None` when a
    /// pivot is not strictly positive, i.e. the matrix is not numerically PD.
    pub fn new(a: ArrayView2<'_, f64>) -> Option<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return None;
        }
        let mut l = Array2::<f64>::zeros((n, n));
        for j in 0..n {
            let mut d = a[[j, j]];
            for k in 0..j {
                d -= l[[j, k]] * l[[j, k]];
            }
            if !(d > 0.0) || !d.is_finite() {
                return None;
            }
            let dj = d.sqrt();
            l[[j, j]] = dj;
            for i in (j + 1)..n {
                let mut s = a[[i, j]];
                for k in 0..j {
                    s -= l[[i, k]] * l[[j, k]];
                }
                l[[i, j]] = s / dj;
            }
        }
        Some(Self { l })
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    /// Solve `A x = b` using the stored factor.
    pub fn solve(&self, b: ArrayView1<'_, f64>) -> Array1<f64> {
        let n = self.dim();
        debug_assert_eq!(b.len(), n);
        let mut x = b.to_owned();
        // forward: L z = b
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s -= self.l[[i, k]] * x[k];
            }
            x[i] = s / self.l[[i, i]];
        }
        // backward: L' x = z
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..n {
                s -= self.l[[k, i]] * x[k];
            }
            x[i] = s / self.l[[i, i]];
        }
        x
    }

    /// Solve `A X = B` column by column.
    pub fn solve_matrix(&self, b: ArrayView2<'_, f64>) -> Array2<f64> {
        let n = self.dim();
        debug_assert_eq!(b.nrows(), n);
        let mut out = Array2::<f64>::zeros((n, b.ncols()));
        for j in 0..b.ncols() {
            let col = self.solve(b.column(j));
            out.column_mut(j).assign(&col);
        }
        out
    }

    /// Inverse via `n` solves against the identity.
    pub fn inverse(&self) -> Array2<f64> {
        let n = self.dim();
        self.solve_matrix(Array2::<f64>::eye(n).view())
    }
}

/// Solve a general square system by LU with partial pivoting. Returns `None`
/// when the matrix is numerically singular.
pub fn lu_solve(a: ArrayView2<'_, f64>, b: ArrayView1<'_, f64>) -> Option<Array1<f64>> {
    let n = a.nrows();
    if a.ncols() != n || b.len() != n {
        return None;
    }
    let mut m = a.to_owned();
    let mut x = b.to_owned();
    for k in 0..n {
        let mut piv = k;
        let mut best = m[[k, k]].abs();
        for i in (k + 1)..n {
            let v = m[[i, k]].abs();
            if v > best {
                best = v;
                piv = i;
            }
        }
        if best == 0.0 || !best.is_finite() {
            return None;
        }
        if piv != k {
            for j in 0..n {
                m.swap([k, j], [piv, j]);
            }
            x.swap(k, piv);
        }
        let d = m[[k, k]];
        for i in (k + 1)..n {
            let f = m[[i, k]] / d;
            if f != 0.0 {
                for j in (k + 1)..n {
                    m[[i, j]] -= f * m[[k, j]];
                }
                x[i] -= f * x[k];
            }
            m[[i, k]] = 0.0;
        }
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for j in (i + 1)..n {
            s -= m[[i, j]] * x[j];
        }
        x[i] = s / m[[i, i]];
    }
    Some(x)
}

/// Singular values of a wide matrix (rows <= columns), ascending, by
/// one-sided Jacobi rotations applied to the rows.
///
/// One-sided Jacobi keeps high relative accuracy for the small singular
/// values — forming `A A'` first would square the condition number and
/// floor a truly dependent row at about the square root of machine epsilon.
pub fn row_singular_values(a: ArrayView2<'_, f64>) -> Array1<f64> {
    let m = a.nrows();
    let mut w = a.to_owned();
    if m > 1 {
        let max_sweeps = 64;
        for _ in 0..max_sweeps {
            let mut rotated = false;
            for i in 0..m {
                for j in (i + 1)..m {
                    let alpha = w.row(i).dot(&w.row(i));
                    let beta = w.row(j).dot(&w.row(j));
                    let gamma = w.row(i).dot(&w.row(j));
                    if gamma.abs() <= 1e-15 * (alpha * beta).sqrt().max(1e-300) {
                        continue;
                    }
                    rotated = true;
                    let zeta = (beta - alpha) / (2.0 * gamma);
                    let t = if zeta >= 0.0 {
                        1.0 / (zeta + (1.0 + zeta * zeta).sqrt())
                    } else {
                        -1.0 / (-zeta + (1.0 + zeta * zeta).sqrt())
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = c * t;
                    for k in 0..w.ncols() {
                        let wik = w[[i, k]];
                        let wjk = w[[j, k]];
                        w[[i, k]] = c * wik - s * wjk;
                        w[[j, k]] = s * wik + c * wjk;
                    }
                }
            }
            if !rotated {
                break;
            }
        }
    }
    let mut sv: Vec<f64> = (0..m).map(|i| w.row(i).dot(&w.row(i)).sqrt()).collect();
    sv.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Array1::from(sv)
}

/// Smallest and largest singular values of a wide matrix.
pub fn row_singular_value_range(a: ArrayView2<'_, f64>) -> (f64, f64) {
    let sv = row_singular_values(a);
    (sv[0], sv[sv.len() - 1])
}

/// Partition row indices into an independent set and the rows that are
/// (numerically) linear combinations of earlier ones, by modified
/// Gram-Schmidt. A row counts as dependent when its residual after projecting
/// onto the retained rows falls below `tol` times its own norm.
pub fn independent_rows(a: ArrayView2<'_, f64>, tol: f64) -> (Vec<usize>, Vec<usize>) {
    let m = a.nrows();
    let mut basis: Vec<Array1<f64>> = Vec::new();
    let mut keep = Vec::new();
    let mut dependent = Vec::new();
    for i in 0..m {
        let mut v = a.row(i).to_owned();
        let norm0 = v.dot(&v).sqrt();
        if norm0 == 0.0 {
            dependent.push(i);
            continue;
        }
        for b in &basis {
            let c = v.dot(b);
            v.scaled_add(-c, b);
        }
        // second pass for numerical safety
        for b in &basis {
            let c = v.dot(b);
            v.scaled_add(-c, b);
        }
        let resid = v.dot(&v).sqrt();
        if resid <= tol * norm0 {
            dependent.push(i);
        } else {
            keep.push(i);
            basis.push(&v / resid);
        }
    }
    (keep, dependent)
}
