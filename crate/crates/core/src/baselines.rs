//! Comparison estimators: closed-form ridge, elastic net / lasso by cyclic
//! coordinate descent, and SCAD through the shared LQA machinery.
//!
//! All of them minimize the unscaled objective `sum (y_i - x_i'b)^2 + penalty`
//! so results are directly comparable with the bridge fits.

use ndarray::{Array1, Array2, ArrayView1};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::Cholesky;
use crate::penalty::{scad_derivative, PenaltySpec};
use crate::solver::{lqa_fit, FitResult, SolverOptions};

#[derive(Debug, Clone)]
pub struct CdOptions {
    /// Convergence tolerance on the maximum coordinate change per sweep.
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for CdOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_sweeps: 10_000,
        }
    }
}

/// Ridge regression `(X'X + lambda I)^-1 X'y`. Never sparsifies.
pub fn fit_ridge(d: &Dataset, lambda: f64) -> Result<FitResult> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "ridge lambda must be > 0, got {lambda}"
        )));
    }
    let x = d.x();
    let p = d.p();
    let mut s = x.t().dot(x);
    for i in 0..p {
        s[[i, i]] += lambda;
    }
    let chol = Cholesky::new(s.view())
        .ok_or_else(|| Error::SingularSystem("ridge system not positive definite".into()))?;
    let beta = chol.solve(x.t().dot(d.y()).view());
    let penalty = PenaltySpec::elastic_net(0.0, lambda)?;
    let resid = d.y() - &x.dot(&beta);
    let objective = resid.dot(&resid) + penalty.penalty_value(beta.as_slice().unwrap());
    Ok(FitResult {
        beta,
        active: (0..p).collect(),
        iterations: 1,
        converged: true,
        objective_trace: vec![objective],
        penalty,
    })
}

fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Elastic net by cyclic coordinate descent on the gram system.
///
/// Objective: `sum (y_i - x_i'b)^2 + lambda * (alpha*|b|_1 + (1-alpha)*|b|_2^2)`,
/// so `alpha = 1` is the lasso and `alpha = 0` reproduces [`fit_ridge`].
pub fn fit_enet(d: &Dataset, lambda: f64, alpha: f64, opts: &CdOptions) -> Result<FitResult> {
    let penalty = PenaltySpec::elastic_net(alpha, lambda)?;
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter("cd tolerance must be > 0".into()));
    }
    let x = d.x();
    let y = d.y();
    let p = d.p();
    let gram = x.t().dot(x);
    let xty = x.t().dot(y);
    let yty = y.dot(y);

    let mut beta = Array1::<f64>::zeros(p);
    // objective in gram form: y'y - 2 b'X'y + b'X'Xb + penalty
    let objective = |b: &Array1<f64>| -> f64 {
        yty - 2.0 * b.dot(&xty) + b.dot(&gram.dot(b)) + penalty.penalty_value(b.as_slice().unwrap())
    };
    let mut trace = vec![objective(&beta)];
    let mut converged = false;
    let mut sweeps = 0;

    let l1 = lambda * alpha;
    let l2 = lambda * (1.0 - alpha);
    for sweep in 1..=opts.max_sweeps {
        sweeps = sweep;
        let mut max_change = 0.0f64;
        for j in 0..p {
            let cjj = gram[[j, j]];
            let denom = cjj + l2;
            if denom <= 0.0 {
                return Err(Error::SingularSystem(format!(
                    "coordinate {j} has zero curvature"
                )));
            }
            // partial residual correlation: (X'y)_j - sum_{k != j} C_jk b_k
            let z = xty[j] - gram.row(j).dot(&beta) + cjj * beta[j];
            let new = soft_threshold(z, l1 / 2.0) / denom;
            let change = (new - beta[j]).abs();
            if change > max_change {
                max_change = change;
            }
            beta[j] = new;
        }
        trace.push(objective(&beta));
        if max_change < opts.tol {
            converged = true;
            break;
        }
    }

    let active: Vec<usize> = (0..p).filter(|&j| beta[j] != 0.0).collect();
    Ok(FitResult {
        beta,
        active,
        iterations: sweeps,
        converged,
        objective_trace: trace,
        penalty,
    })
}

/// SCAD-penalized least squares via LQA with the same pruning rule as the
/// bridge fits. Large coefficients (`|b| >= a*lambda`) receive zero weight
/// and are left unshrunk.
pub fn fit_scad(d: &Dataset, lambda: f64, a: f64, opts: &SolverOptions) -> Result<FitResult> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "scad lambda must be > 0, got {lambda}"
        )));
    }
    let penalty = PenaltySpec::scad(a, lambda)?;
    let weight_fn = move |b: ArrayView1<'_, f64>| -> Result<Array1<f64>> {
        Ok(b.mapv(|bj| {
            let t = bj.abs();
            scad_derivative(t, lambda, a) / (2.0 * t)
        }))
    };
    lqa_fit(d, penalty, &weight_fn, None, opts)
}

#[allow(dead_code)]
fn gram_of(d: &Dataset) -> Array2<f64> {
    d.x().t().dot(d.x())
}
