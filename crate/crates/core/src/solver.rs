//! The local-quadratic-approximation engine: bridge fits, the restricted
//! correction, and the analytic mean squared error of the restricted
//! estimator.
//!
//! For a working point `b0` the Lq penalty `lambda * sum |b_j|^q` is replaced
//! by a quadratic with diagonal weights `(lambda*q/2) * |b0_j|^(q-2)`, giving
//! the closed-form update `b = (X'X + W)^-1 X'y`. Restricted fits apply the
//! correction `b - S^-1 R' (R S^-1 R')^-1 (R b - r)` with `S = X'X + W` after
//! every update, so each iterate satisfies the constraints. Coordinates whose
//! magnitude falls below `eta` are deleted and never re-enter.

use ndarray::{Array1, Array2, ArrayView1};
use serde_json::json;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{self, Cholesky};
use crate::penalty::{PenaltyFamily, PenaltySpec};
use crate::restriction::{ReducedRestriction, Restriction};

/// Starting point for the LQA iteration.
#[derive(Debug, Clone)]
pub enum Init {
    /// Ridge coefficients at the given positive penalty.
    Ridge { lambda: f64 },
    Explicit(Array1<f64>),
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Pruning and convergence threshold.
    pub eta: f64,
    pub max_iter: usize,
    pub init: Init,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            eta: 1e-7,
            max_iter: 500,
            init: Init::Ridge { lambda: 1.0 },
        }
    }
}

impl SolverOptions {
    fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "eta must be > 0, got {}",
                self.eta
            )));
        }
        if self.max_iter < 1 {
            return Err(Error::InvalidParameter("max_iter must be >= 1".into()));
        }
        if let Init::Ridge { lambda } = self.init {
            if !(lambda > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "init ridge lambda must be > 0, got {lambda}"
                )));
            }
        }
        Ok(())
    }
}

/// Outcome of a penalized fit. Coordinates outside `active` are exactly zero.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub beta: Array1<f64>,
    /// 0-based indices of retained columns, ascending.
    pub active: Vec<usize>,
    pub iterations: usize,
    pub converged: bool,
    /// Penalized objective at the initial point and after each iteration.
    pub objective_trace: Vec<f64>,
    pub penalty: PenaltySpec,
}

impl FitResult {
    pub fn n_active(&self) -> usize {
        self.active.len()
    }

    /// JSON form: `{beta, active, iterations, converged, lambda, q, objective_trace}`
    /// plus the penalty family (and `alpha`/`a` where applicable).
    pub fn to_json(&self) -> serde_json::Value {
        let (family, q, alpha, a) = match self.penalty.family {
            PenaltyFamily::Bridge { q } => ("bridge", Some(q), None, None),
            PenaltyFamily::ElasticNet { alpha } => ("elastic_net", None, Some(alpha), None),
            PenaltyFamily::Scad { a } => ("scad", None, None, Some(a)),
        };
        json!({
            "beta": self.beta.to_vec(),
            "active": self.active,
            "iterations": self.iterations,
            "converged": self.converged,
            "lambda": self.penalty.lambda,
            "q": q,
            "family": family,
            "alpha": alpha,
            "a": a,
            "objective_trace": self.objective_trace,
        })
    }
}

/// The quadratic system of one LQA step restricted to the active columns:
/// gram matrix, penalty weights and their sum `S`.
#[derive(Debug, Clone)]
pub struct LqaSystem {
    gram: Array2<f64>,
    weights: Array1<f64>,
    s: Array2<f64>,
}

impl LqaSystem {
    pub fn new(gram: Array2<f64>, weights: Array1<f64>) -> Result<Self> {
        let n = gram.nrows();
        if gram.ncols() != n {
            return Err(Error::InvalidData("gram matrix must be square".into()));
        }
        if weights.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: weights.len(),
                context: "weights vs gram dimension",
            });
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidData(
                "penalty weights must be finite and non-negative".into(),
            ));
        }
        let scale = gram.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
        for i in 0..n {
            for j in (i + 1)..n {
                if (gram[[i, j]] - gram[[j, i]]).abs() > 1e-8 * scale {
                    return Err(Error::InvalidData("gram matrix must be symmetric".into()));
                }
            }
        }
        let mut s = gram.clone();
        for i in 0..n {
            s[[i, i]] += weights[i];
        }
        Ok(Self { gram, weights, s })
    }

    pub fn gram(&self) -> &Array2<f64> {
        &self.gram
    }

    pub fn weights(&self) -> &Array1<f64> {
        &self.weights
    }

    pub fn s(&self) -> &Array2<f64> {
        &self.s
    }

    pub fn dim(&self) -> usize {
        self.s.nrows()
    }
}

/// Diagonal LQA weights `(lambda*q/2) * |b0_j|^(q-2)` for the bridge penalty.
///
/// Callers must have pruned: every `|b0_j|` must be at least `eta` when
/// `q < 2`, otherwise the weight would blow up.
pub fn penalty_weights(
    beta_local: ArrayView1<'_, f64>,
    lambda: f64,
    q: f64,
    eta: f64,
) -> Result<Array1<f64>> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidParameter(format!("lambda must be >= 0, got {lambda}")));
    }
    if !(q > 0.0) {
        return Err(Error::InvalidParameter(format!("q must be > 0, got {q}")));
    }
    if q < 2.0 {
        if let Some(j) = beta_local.iter().position(|b| b.abs() < eta) {
            return Err(Error::Contract(format!(
                "penalty_weights requires |beta[{j}]| >= eta={eta} for q={q} (got {})",
                beta_local[j]
            )));
        }
    }
    let c = lambda * q / 2.0;
    Ok(beta_local.mapv(|b| c * b.abs().powf(q - 2.0)))
}

/// Ridge coefficients `(X'X + lambda I)^-1 X'y`, the default starting point.
pub fn ridge_init(d: &Dataset, lambda_init: f64) -> Result<Array1<f64>> {
    if !(lambda_init > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "ridge init lambda must be > 0, got {lambda_init}"
        )));
    }
    let x = d.x();
    let mut s = x.t().dot(x);
    for i in 0..d.p() {
        s[[i, i]] += lambda_init;
    }
    let xty = x.t().dot(d.y());
    let chol = Cholesky::new(s.view())
        .ok_or_else(|| Error::SingularSystem("ridge system not positive definite".into()))?;
    Ok(chol.solve(xty.view()))
}

/// Least squares on an optional 0-based support, zeros elsewhere.
pub fn ols(d: &Dataset, support: Option<&[usize]>) -> Result<Array1<f64>> {
    let p = d.p();
    let all: Vec<usize>;
    let support = match support {
        Some(s) => s,
        None => {
            all = (0..p).collect();
            &all
        }
    };
    let mut beta = Array1::<f64>::zeros(p);
    if support.is_empty() {
        return Ok(beta);
    }
    if support.iter().any(|&j| j >= p) {
        return Err(Error::InvalidParameter("support index out of range".into()));
    }
    let x = d.x();
    let k = support.len();
    let mut gram = Array2::<f64>::zeros((k, k));
    let mut xty = Array1::<f64>::zeros(k);
    for (a, &ja) in support.iter().enumerate() {
        xty[a] = x.column(ja).dot(d.y());
        for (b, &jb) in support.iter().enumerate().skip(a) {
            let v = x.column(ja).dot(&x.column(jb));
            gram[[a, b]] = v;
            gram[[b, a]] = v;
        }
    }
    let chol = Cholesky::new(gram.view()).ok_or_else(|| {
        Error::SingularSystem("gram matrix on the requested support is singular".into())
    })?;
    let sol = chol.solve(xty.view());
    for (a, &j) in support.iter().enumerate() {
        beta[j] = sol[a];
    }
    Ok(beta)
}

/// Project `beta_hat` onto the constraint set `R b = r` in the metric of the
/// LQA system: `b - S^-1 R' (R S^-1 R')^-1 (R b - r)`. Among all vectors
/// satisfying the restriction this minimizes `(b - beta_hat)' S (b - beta_hat)`.
pub fn restricted_correction(
    beta_hat: ArrayView1<'_, f64>,
    sys: &LqaSystem,
    rest: &Restriction,
) -> Result<Array1<f64>> {
    let p = sys.dim();
    if beta_hat.len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: beta_hat.len(),
            context: "beta vs system dimension",
        });
    }
    if rest.dim() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: rest.dim(),
            context: "restriction vs system dimension",
        });
    }
    let chol = Cholesky::new(sys.s().view())
        .ok_or_else(|| Error::SingularSystem("LQA system S is not positive definite".into()))?;
    raw_correction(beta_hat, &chol, rest.matrix(), rest.rhs().view(), None)
}

/// Correction against an already-factored `S`. `row_labels` maps local rows
/// back to the original restriction rows for error reporting.
fn raw_correction(
    beta_hat: ArrayView1<'_, f64>,
    chol_s: &Cholesky,
    r_mat: &Array2<f64>,
    r_vec: ArrayView1<'_, f64>,
    row_labels: Option<&[usize]>,
) -> Result<Array1<f64>> {
    let m = r_mat.nrows();
    let p = r_mat.ncols();
    // B = S^-1 R', one solve per constraint row
    let mut b = Array2::<f64>::zeros((p, m));
    for i in 0..m {
        let col = chol_s.solve(r_mat.row(i));
        b.column_mut(i).assign(&col);
    }
    let g = r_mat.dot(&b);
    let chol_g = Cholesky::new(g.view()).ok_or_else(|| {
        let (_, dependent) = linalg::independent_rows(r_mat.view(), crate::restriction::RANK_TOL);
        let named: Vec<usize> = dependent
            .iter()
            .map(|&i| row_labels.map_or(i + 1, |labels| labels[i] + 1))
            .collect();
        Error::RankDeficient(format!(
            "R S^-1 R' is numerically singular; offending restriction rows (1-based): {named:?}"
        ))
    })?;
    let resid = r_mat.dot(&beta_hat) - &r_vec;
    let z = chol_g.solve(resid.view());
    let correction = b.dot(&z);
    Ok(&beta_hat - &correction)
}

/// One LQA weight rule evaluated on the active coefficients.
pub(crate) type WeightFn<'a> = dyn Fn(ArrayView1<'_, f64>) -> Result<Array1<f64>> + 'a;

/// Shared LQA iteration with pruning and optional restriction.
pub(crate) fn lqa_fit(
    d: &Dataset,
    penalty: PenaltySpec,
    weight_fn: &WeightFn<'_>,
    restriction: Option<&Restriction>,
    opts: &SolverOptions,
) -> Result<FitResult> {
    opts.validate()?;
    if let Some(rest) = restriction {
        if rest.dim() != d.p() {
            return Err(Error::DimensionMismatch {
                expected: d.p(),
                got: rest.dim(),
                context: "restriction vs dataset columns",
            });
        }
    }
    let p = d.p();
    let x = d.x();
    let y = d.y();
    let gram = x.t().dot(x);
    let xty = x.t().dot(y);

    let mut beta = match &opts.init {
        Init::Ridge { lambda } => ridge_init(d, *lambda)?,
        Init::Explicit(v) => {
            if v.len() != p {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    got: v.len(),
                    context: "explicit init vs columns",
                });
            }
            if v.iter().any(|b| !b.is_finite()) {
                return Err(Error::InvalidParameter("explicit init must be finite".into()));
            }
            v.clone()
        }
    };
    let mut active: Vec<usize> = (0..p).collect();

    let objective = |b: &Array1<f64>| -> f64 {
        let resid = y - &x.dot(b);
        resid.dot(&resid) + penalty.penalty_value(b.as_slice().unwrap())
    };
    let mut trace = vec![objective(&beta)];
    let mut converged = false;
    let mut iterations = 0;

    for t in 1..=opts.max_iter {
        iterations = t;
        let prev = beta.clone();

        // delete small coordinates; they never re-enter
        active.retain(|&j| beta[j].abs() >= opts.eta);
        for j in 0..p {
            if !active.contains(&j) {
                beta[j] = 0.0;
            }
        }

        let reduced: Option<ReducedRestriction> = match restriction {
            Some(rest) => rest.reduce_to_columns(&active)?,
            None => None,
        };

        if !active.is_empty() {
            let pa = active.len();
            let beta_active =
                Array1::from(active.iter().map(|&j| beta[j]).collect::<Vec<f64>>());
            let w = weight_fn(beta_active.view())?;
            let mut s = Array2::<f64>::zeros((pa, pa));
            for (a, &ja) in active.iter().enumerate() {
                for (b, &jb) in active.iter().enumerate() {
                    s[[a, b]] = gram[[ja, jb]];
                }
                s[[a, a]] += w[a];
            }
            let chol = Cholesky::new(s.view()).ok_or_else(|| {
                if penalty.lambda == 0.0 {
                    Error::SingularSystem(
                        "X'X is singular and lambda = 0 provides no regularization".into(),
                    )
                } else {
                    Error::SingularSystem("LQA system is not positive definite".into())
                }
            })?;
            let xty_active =
                Array1::from(active.iter().map(|&j| xty[j]).collect::<Vec<f64>>());
            let unrestricted = chol.solve(xty_active.view());
            let updated = match &reduced {
                Some(rr) => raw_correction(
                    unrestricted.view(),
                    &chol,
                    &rr.matrix,
                    rr.rhs.view(),
                    Some(&rr.source_rows),
                )?,
                None => unrestricted,
            };
            for (a, &j) in active.iter().enumerate() {
                beta[j] = updated[a];
            }
        }

        trace.push(objective(&beta));
        let delta = (&beta - &prev).mapv(|v| v * v).sum().sqrt();
        if delta < opts.eta {
            converged = true;
            break;
        }
    }

    Ok(FitResult {
        beta,
        active,
        iterations,
        converged,
        objective_trace: trace,
        penalty,
    })
}

/// Bridge fit: Lq-penalized least squares by iterated LQA with pruning.
pub fn fit_bridge(d: &Dataset, pen: &PenaltySpec, opts: &SolverOptions) -> Result<FitResult> {
    let q = pen
        .bridge_q()
        .ok_or_else(|| Error::InvalidParameter("fit_bridge needs a bridge penalty".into()))?;
    let lambda = pen.lambda;
    let eta = opts.eta;
    let weight_fn = move |b: ArrayView1<'_, f64>| penalty_weights(b, lambda, q, eta);
    lqa_fit(d, *pen, &weight_fn, None, opts)
}

/// Restricted bridge fit: the bridge iteration with the equality-constraint
/// correction applied at every step.
pub fn fit_rbridge(
    d: &Dataset,
    pen: &PenaltySpec,
    rest: &Restriction,
    opts: &SolverOptions,
) -> Result<FitResult> {
    let q = pen
        .bridge_q()
        .ok_or_else(|| Error::InvalidParameter("fit_rbridge needs a bridge penalty".into()))?;
    let lambda = pen.lambda;
    let eta = opts.eta;
    let weight_fn = move |b: ArrayView1<'_, f64>| penalty_weights(b, lambda, q, eta);
    lqa_fit(d, *pen, &weight_fn, Some(rest), opts)
}

/// Analytic mean squared error of the one-step fixed-weights restricted
/// estimator: `sigma2 * tr(M S M) + tr(M W b b' W M)` with
/// `M = S^-1 - S^-1 R' (R S^-1 R')^-1 R S^-1` and `W` the weight diagonal.
///
/// Requires the restriction to hold at `beta_true`, which is the regime the
/// formula describes.
pub fn analytic_mse(
    sys: &LqaSystem,
    rest: &Restriction,
    beta_true: ArrayView1<'_, f64>,
    sigma2: f64,
) -> Result<f64> {
    let p = sys.dim();
    if rest.dim() != p || beta_true.len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: rest.dim().max(beta_true.len()),
            context: "analytic_mse dimensions",
        });
    }
    if !(sigma2 >= 0.0) {
        return Err(Error::InvalidParameter(format!("sigma2 must be >= 0, got {sigma2}")));
    }
    let rhs_scale = 1.0 + rest.rhs().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let violation = rest.violation(beta_true);
    if violation > 1e-8 * rhs_scale {
        return Err(Error::Contract(format!(
            "beta_true violates the restriction (||R b - r||_inf = {violation:.3e})"
        )));
    }
    let chol = Cholesky::new(sys.s().view())
        .ok_or_else(|| Error::SingularSystem("LQA system S is not positive definite".into()))?;
    let s_inv = chol.inverse();
    let r = rest.matrix();
    let m = rest.num_constraints();
    let mut b = Array2::<f64>::zeros((p, m));
    for i in 0..m {
        let col = chol.solve(r.row(i));
        b.column_mut(i).assign(&col);
    }
    let g = r.dot(&b);
    let chol_g = Cholesky::new(g.view()).ok_or_else(|| {
        Error::RankDeficient("R S^-1 R' is numerically singular in analytic_mse".into())
    })?;
    // W = G^-1 B'  (m x p), M = S^-1 - B W
    let w = chol_g.solve_matrix(b.t());
    let big_m = &s_inv - &b.dot(&w);

    // variance term: tr(M S M)
    let ms = big_m.dot(sys.s());
    let mut tr_msm = 0.0;
    for i in 0..p {
        for j in 0..p {
            tr_msm += ms[[i, j]] * big_m[[j, i]];
        }
    }
    // bias term: || M W beta ||^2 with M symmetric
    let u = sys.weights() * &beta_true;
    let mu = big_m.dot(&u);
    let bias = mu.dot(&mu);
    Ok(sigma2 * tr_msm + bias)
}
