//! K-fold cross-validation over joint `(lambda, q)` grids.
//!
//! The error at a grid point is `CV = (1/K) sum_k PE_k` with
//! `PE_k = (1/n) sum_{i in fold k} (y_i - x_i'b^{(-k)})^2` — note the full-`n`
//! normalizer, so `K*n*CV` equals the total held-out squared error exactly.

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::restriction::Restriction;
use crate::solver::{fit_bridge, fit_rbridge, SolverOptions};
use crate::PenaltySpec;

/// Normalizer used inside the per-fold prediction error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CvNorm {
    /// Divide every fold's squared error by the full sample size.
    #[default]
    FullN,
    /// Divide by the size of the held-out fold instead.
    FoldSize,
}

#[derive(Debug, Clone)]
pub struct CvGrid {
    lambdas: Vec<f64>,
    qs: Vec<f64>,
    pub k: usize,
    pub norm: CvNorm,
}

impl CvGrid {
    /// Build a grid; lambdas are sorted descending, qs ascending.
    pub fn new(lambdas: Vec<f64>, qs: Vec<f64>, k: usize) -> Result<Self> {
        if lambdas.is_empty() {
            return Err(Error::InvalidParameter("lambda grid is empty".into()));
        }
        if lambdas.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
            return Err(Error::InvalidParameter(
                "lambda grid must be strictly positive".into(),
            ));
        }
        if qs.is_empty() || qs.iter().any(|q| !(*q > 0.0)) {
            return Err(Error::InvalidParameter("q grid must be positive".into()));
        }
        if k < 2 {
            return Err(Error::InvalidParameter("K must be at least 2".into()));
        }
        let mut lambdas = lambdas;
        lambdas.sort_by(|a, b| b.partial_cmp(a).unwrap());
        lambdas.dedup();
        let mut qs = qs;
        qs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        qs.dedup();
        Ok(Self {
            lambdas,
            qs,
            k,
            norm: CvNorm::FullN,
        })
    }

    /// The default exponent grid 0.25, 0.50, ..., 2.00.
    pub fn default_qs() -> Vec<f64> {
        (1..=8).map(|i| i as f64 * 0.25).collect()
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn qs(&self) -> &[f64] {
        &self.qs
    }
}

/// Result of a grid search: the CVE table, the winning pair and the fold
/// assignment that produced it.
#[derive(Debug, Clone)]
pub struct CvResult {
    pub lambdas: Vec<f64>,
    pub qs: Vec<f64>,
    /// `cve[[i, j]]` is the error at `(lambdas[i], qs[j])`.
    pub cve: Array2<f64>,
    pub best_lambda: f64,
    pub best_q: f64,
    pub best_index: (usize, usize),
    pub fold_assignments: Vec<usize>,
    pub seed: u64,
}

/// One exportable row of the CVE surface.
#[derive(Debug, Clone, Serialize)]
pub struct SurfaceRow {
    pub q: f64,
    pub log_lambda: f64,
    pub cve: f64,
}

impl CvResult {
    /// Flatten the table into `(q, log lambda, cve)` rows, ordered by q then
    /// by log lambda ascending.
    pub fn surface(&self) -> Vec<SurfaceRow> {
        let mut rows = Vec::with_capacity(self.lambdas.len() * self.qs.len());
        for (j, &q) in self.qs.iter().enumerate() {
            for i in (0..self.lambdas.len()).rev() {
                rows.push(SurfaceRow {
                    q,
                    log_lambda: self.lambdas[i].ln(),
                    cve: self.cve[[i, j]],
                });
            }
        }
        rows
    }

    pub fn min_cve(&self) -> f64 {
        self.cve[[self.best_index.0, self.best_index.1]]
    }
}

/// Deterministically assign `n` observations to `K` folds of near-equal size.
pub fn kfold_partition(n: usize, k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 || k > n {
        return Err(Error::InvalidParameter(format!(
            "need 2 <= K <= n, got K={k}, n={n}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let mut assignment = vec![0usize; n];
    for (pos, &idx) in order.iter().enumerate() {
        assignment[idx] = pos % k;
    }
    Ok(assignment)
}

/// A tuning-parameter-aware estimator: fits on a training set at `(lambda, q)`
/// and returns coefficients. Estimators without a `q` axis ignore it.
pub type CvFitter<'a> = dyn Fn(&Dataset, f64, f64) -> Result<Array1<f64>> + 'a;

/// Grid search by K-fold cross-validation. Failed fits score infinity; ties
/// break toward larger lambda, then larger q.
pub fn cross_validate(
    fitter: &CvFitter<'_>,
    d: &Dataset,
    grid: &CvGrid,
    seed: u64,
) -> Result<CvResult> {
    let n = d.n();
    let assignment = kfold_partition(n, grid.k, seed)?;
    let mut fold_rows: Vec<Vec<usize>> = vec![Vec::new(); grid.k];
    for (i, &f) in assignment.iter().enumerate() {
        fold_rows[f].push(i);
    }
    let mut splits = Vec::with_capacity(grid.k);
    for f in 0..grid.k {
        let test = fold_rows[f].clone();
        let train: Vec<usize> = (0..n).filter(|i| assignment[*i] != f).collect();
        let train_data = d.select_rows(&train)?;
        splits.push((train_data, test));
    }

    let nl = grid.lambdas.len();
    let nq = grid.qs.len();
    let mut cve = Array2::<f64>::zeros((nl, nq));
    for (i, &lambda) in grid.lambdas.iter().enumerate() {
        for (j, &q) in grid.qs.iter().enumerate() {
            let mut fold_sse = Vec::with_capacity(grid.k);
            let mut failed = false;
            for (train_data, test) in &splits {
                match fitter(train_data, lambda, q) {
                    Ok(beta) => {
                        let mut sse = 0.0;
                        for &row in test {
                            let pred = d.x().row(row).dot(&beta);
                            let r = d.y()[row] - pred;
                            sse += r * r;
                        }
                        fold_sse.push((sse, test.len()));
                    }
                    Err(_) => {
                        failed = true;
                        break;
                    }
                }
            }
            cve[[i, j]] = if failed {
                f64::INFINITY
            } else {
                match grid.norm {
                    // (1/K) sum_k sse_k / n == total SSE / (K*n), computed in
                    // the right-hand form so the identity is exact in floats
                    CvNorm::FullN => {
                        let total: f64 = fold_sse.iter().map(|(s, _)| s).sum();
                        total / (grid.k as f64 * n as f64)
                    }
                    CvNorm::FoldSize => {
                        let sum: f64 =
                            fold_sse.iter().map(|(s, nk)| s / *nk as f64).sum();
                        sum / grid.k as f64
                    }
                }
            };
        }
    }

    // scan lambdas descending (already sorted) and qs descending so that the
    // first strict minimum keeps the largest lambda, then the largest q
    let mut best: Option<(usize, usize, f64)> = None;
    for i in 0..nl {
        for j in (0..nq).rev() {
            let v = cve[[i, j]];
            if !v.is_finite() {
                continue;
            }
            match best {
                Some((_, _, cur)) if v >= cur => {}
                _ => best = Some((i, j, v)),
            }
        }
    }
    let (bi, bj, _) = best.ok_or(Error::AllGridPointsFailed)?;

    Ok(CvResult {
        lambdas: grid.lambdas.clone(),
        qs: grid.qs.clone(),
        cve,
        best_lambda: grid.lambdas[bi],
        best_q: grid.qs[bj],
        best_index: (bi, bj),
        fold_assignments: assignment,
        seed,
    })
}

/// Log-spaced lambda grid from `2 * ||X'y||_inf` down four decades.
pub fn default_lambda_grid(d: &Dataset, count: usize) -> Result<Vec<f64>> {
    if count < 2 {
        return Err(Error::InvalidParameter("grid needs at least 2 points".into()));
    }
    let xty = d.x().t().dot(d.y());
    let max_corr = xty.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if max_corr == 0.0 {
        return Err(Error::DegenerateResponse);
    }
    let lambda_max = 2.0 * max_corr;
    let lambda_min = lambda_max * 1e-4;
    let log_max = lambda_max.ln();
    let log_min = lambda_min.ln();
    let grid: Vec<f64> = (0..count)
        .map(|i| {
            let t = i as f64 / (count - 1) as f64;
            (log_max + t * (log_min - log_max)).exp()
        })
        .collect();
    Ok(grid)
}

/// Cross-validated error surface of the (restricted) bridge estimator,
/// exportable as `(q, log lambda, cve)` rows.
pub fn cve_surface(
    d: &Dataset,
    grid: &CvGrid,
    rest: Option<&Restriction>,
    opts: &SolverOptions,
    seed: u64,
) -> Result<Vec<SurfaceRow>> {
    let result = cross_validate_bridge(d, grid, rest, opts, seed)?;
    Ok(result.surface())
}

/// Run the grid search with the bridge (or restricted bridge) as the fitter.
pub fn cross_validate_bridge(
    d: &Dataset,
    grid: &CvGrid,
    rest: Option<&Restriction>,
    opts: &SolverOptions,
    seed: u64,
) -> Result<CvResult> {
    let fitter = |train: &Dataset, lambda: f64, q: f64| -> Result<Array1<f64>> {
        let pen = PenaltySpec::bridge(q, lambda)?;
        let fit = match rest {
            Some(r) => fit_rbridge(train, &pen, r, opts)?,
            None => fit_bridge(train, &pen, opts)?,
        };
        if !fit.converged {
            return Err(Error::SingularSystem("fit did not converge".into()));
        }
        Ok(fit.beta)
    };
    cross_validate(&fitter, d, grid, seed)
}
