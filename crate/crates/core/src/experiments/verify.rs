//! Executable checks of the estimator's analytic properties: the mean
//! squared error formula against Monte Carlo, estimation consistency under a
//! vanishing penalty rate, and the closed-form equivalences at q = 2.

use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::experiments::{derive_seed, gen_ar1_design, gen_response, median, Scenario};
use crate::linalg::{lu_solve, Cholesky};
use crate::restriction::{restriction_affine, Restriction};
use crate::solver::{analytic_mse, fit_bridge, fit_rbridge, penalty_weights, LqaSystem, SolverOptions};
use crate::PenaltySpec;

/// Penalty growth rule `lambda_n` as a function of the sample size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaRule {
    /// `lambda_n = sqrt(n)`; vanishes relative to n.
    SqrtN,
    /// `lambda_n = n`; does not vanish relative to n.
    LinearN,
    /// Constant penalty; vanishes relative to n.
    Fixed(f64),
    /// `lambda_n = coef * n^exponent`.
    Power { coef: f64, exponent: f64 },
}

impl LambdaRule {
    pub fn lambda(&self, n: usize) -> f64 {
        let nf = n as f64;
        match *self {
            LambdaRule::SqrtN => nf.sqrt(),
            LambdaRule::LinearN => nf,
            LambdaRule::Fixed(c) => c,
            LambdaRule::Power { coef, exponent } => coef * nf.powf(exponent),
        }
    }

    /// Whether `lambda_n / n -> 0`, the hypothesis of the consistency result.
    pub fn vanishes_relative_to_n(&self) -> bool {
        match *self {
            LambdaRule::SqrtN | LambdaRule::Fixed(_) => true,
            LambdaRule::LinearN => false,
            LambdaRule::Power { coef, exponent } => coef == 0.0 || exponent < 1.0,
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            LambdaRule::SqrtN => "lambda_n = sqrt(n)".into(),
            LambdaRule::LinearN => "lambda_n = n".into(),
            LambdaRule::Fixed(c) => format!("lambda_n = {c}"),
            LambdaRule::Power { coef, exponent } => format!("lambda_n = {coef} * n^{exponent}"),
        }
    }
}

/// One sigma level of the MSE formula check.
#[derive(Debug, Clone)]
pub struct MseCheck {
    pub sigma: f64,
    pub analytic: f64,
    pub empirical: f64,
    pub rel_gap: f64,
    pub pass: bool,
}

/// Compare the analytic MSE of the one-step fixed-weights restricted
/// estimator against its Monte Carlo average over fresh noise draws.
///
/// The scene is fixed: n = 100, p = 4, AR(1) design with rho = 0.5, a single
/// constraint satisfied by the true coefficients, and weights formed at the
/// true coefficients with lambda = 1, q = 1.
pub fn mse_formula_check(
    draws: usize,
    sigmas: &[f64],
    tol: f64,
    seed: u64,
) -> Result<Vec<MseCheck>> {
    if draws < 100 {
        return Err(Error::InvalidParameter("need at least 100 draws".into()));
    }
    let n = 100;
    let beta = Array1::from(vec![2.0, -1.0, 1.5, 0.5]);
    let p = beta.len();
    let x = gen_ar1_design(n, p, 0.5, derive_seed(seed, 1))?;
    let r_row = vec![1.0, -1.0, 0.5, 0.0];
    let rhs: f64 = r_row.iter().zip(beta.iter()).map(|(a, b)| a * b).sum();
    let rest = restriction_affine(&[(r_row, rhs)])?;

    let (lambda, q) = (1.0, 1.0);
    let weights = penalty_weights(beta.view(), lambda, q, 1e-7)?;
    let gram = x.t().dot(&x);
    let sys = LqaSystem::new(gram, weights)?;

    let chol = Cholesky::new(sys.s().view())
        .ok_or_else(|| Error::SingularSystem("S not positive definite".into()))?;
    let m = rest.num_constraints();
    let mut b_mat = Array2::<f64>::zeros((p, m));
    for i in 0..m {
        b_mat.column_mut(i).assign(&chol.solve(rest.matrix().row(i)));
    }
    let g = rest.matrix().dot(&b_mat);
    let chol_g = Cholesky::new(g.view())
        .ok_or_else(|| Error::RankDeficient("R S^-1 R' singular".into()))?;

    let signal = x.dot(&beta);
    let mut out = Vec::with_capacity(sigmas.len());
    for (si, &sigma) in sigmas.iter().enumerate() {
        let analytic = analytic_mse(&sys, &rest, beta.view(), sigma * sigma)?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 100 + si as u64));
        let mut acc = 0.0;
        let mut y = Array1::<f64>::zeros(n);
        for _ in 0..draws {
            for i in 0..n {
                let z: f64 = StandardNormal.sample(&mut rng);
                y[i] = signal[i] + sigma * z;
            }
            let bh = chol.solve(x.t().dot(&y).view());
            let resid = rest.matrix().dot(&bh) - rest.rhs();
            let z = chol_g.solve(resid.view());
            let br = &bh - &b_mat.dot(&z);
            let delta = &br - &beta;
            acc += delta.dot(&delta);
        }
        let empirical = acc / draws as f64;
        let rel_gap = (empirical - analytic).abs() / analytic;
        out.push(MseCheck {
            sigma,
            analytic,
            empirical,
            rel_gap,
            pass: rel_gap <= tol,
        });
    }
    Ok(out)
}

/// Median squared estimation errors along a schedule of sample sizes.
#[derive(Debug, Clone)]
pub struct ConsistencyReport {
    pub ns: Vec<usize>,
    pub lambdas: Vec<f64>,
    pub medians: Vec<f64>,
    /// Number of consecutive strictly decreasing steps.
    pub decreasing_steps: usize,
    /// Whether the rule satisfies `lambda_n = o(n)`.
    pub hypothesis_satisfied: bool,
    /// All steps strictly decreasing.
    pub monotone: bool,
}

/// Track `||bR - b||^2` as the sample size grows under a penalty rule.
/// A rule violating `lambda_n = o(n)` is run anyway and flagged.
pub fn consistency_experiment(
    ns: &[usize],
    rule: &LambdaRule,
    q: f64,
    template: &Scenario,
    nreps: usize,
    seed: u64,
) -> Result<ConsistencyReport> {
    if ns.len() < 2 {
        return Err(Error::InvalidParameter("need at least two sample sizes".into()));
    }
    if ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("sample sizes must increase".into()));
    }
    let opts = SolverOptions::default();
    let mut medians = Vec::with_capacity(ns.len());
    let mut lambdas = Vec::with_capacity(ns.len());
    for (ni, &n) in ns.iter().enumerate() {
        let lambda = rule.lambda(n);
        lambdas.push(lambda);
        let pen = PenaltySpec::bridge(q, lambda)?;
        let mut errors = Vec::with_capacity(nreps);
        for rep in 0..nreps {
            let rep_seed = derive_seed(seed ^ rep as u64, 1000 + ni as u64);
            let x = gen_ar1_design(n, template.p(), template.rho, derive_seed(rep_seed, 1))?;
            let y = gen_response(
                x.view(),
                template.beta_true.view(),
                template.sigma,
                derive_seed(rep_seed, 2),
            )?;
            let d = Dataset::new(x, y, None)?;
            let fit = fit_rbridge(&d, &pen, &template.restriction, &opts)?;
            let delta = &fit.beta - &template.beta_true;
            errors.push(delta.dot(&delta));
        }
        medians.push(median(&errors));
    }
    let decreasing_steps = medians.windows(2).filter(|w| w[1] < w[0]).count();
    let monotone = decreasing_steps == ns.len() - 1;
    Ok(ConsistencyReport {
        ns: ns.to_vec(),
        lambdas,
        medians,
        decreasing_steps,
        hypothesis_satisfied: rule.vanishes_relative_to_n(),
        monotone,
    })
}

/// Worst-case gaps between the LQA fits at q = 2 and their closed forms.
#[derive(Debug, Clone)]
pub struct OracleEquivReport {
    pub instances: usize,
    pub max_gap_bridge: f64,
    pub max_gap_rbridge: f64,
    pub pass: bool,
}

/// At q = 2 the bridge fit must equal closed-form ridge and the restricted
/// fit must equal the equality-constrained ridge; both reference solutions
/// are computed by dense LU on independently assembled systems.
pub fn oracle_equivalence_check(instances: usize, tol: f64, seed: u64) -> Result<OracleEquivReport> {
    let opts = SolverOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_gap_bridge = 0.0f64;
    let mut max_gap_rbridge = 0.0f64;
    for inst in 0..instances {
        let n = 20 + (inst % 30);
        let p = 2 + (inst % 6);
        let x = gen_ar1_design(n, p, 0.3, derive_seed(seed, 2 * inst as u64))?;
        let mut beta_true = Array1::<f64>::zeros(p);
        for v in beta_true.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
        let y = gen_response(x.view(), beta_true.view(), 1.0, derive_seed(seed, 2 * inst as u64 + 1))?;
        let d = Dataset::new(x.clone(), y.clone(), None)?;
        let u: f64 = rand::Rng::random(&mut rng);
        let lambda = 10f64.powf(-1.0 + 2.0 * u);
        let pen = PenaltySpec::bridge(2.0, lambda)?;

        let fit = fit_bridge(&d, &pen, &opts)?;
        let mut a = x.t().dot(&x);
        for i in 0..p {
            a[[i, i]] += lambda;
        }
        let xty = x.t().dot(&y);
        let ridge = lu_solve(a.view(), xty.view())
            .ok_or_else(|| Error::SingularSystem("ridge oracle solve failed".into()))?;
        for j in 0..p {
            let rel = (fit.beta[j] - ridge[j]).abs() / ridge[j].abs().max(1.0);
            max_gap_bridge = max_gap_bridge.max(rel);
        }

        // a single random restriction row
        let mut row = vec![0.0; p];
        for v in row.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
        let rhs: f64 = StandardNormal.sample(&mut rng);
        let rest = match restriction_affine(&[(row.clone(), rhs)]) {
            Ok(r) => r,
            Err(_) => continue,
        };
        let rfit = fit_rbridge(&d, &pen, &rest, &opts)?;
        let kkt_sol = solve_equality_ridge_kkt(&a, &xty, &rest)?;
        for j in 0..p {
            let rel = (rfit.beta[j] - kkt_sol[j]).abs() / kkt_sol[j].abs().max(1.0);
            max_gap_rbridge = max_gap_rbridge.max(rel);
        }
    }
    Ok(OracleEquivReport {
        instances,
        max_gap_bridge,
        max_gap_rbridge,
        pass: max_gap_bridge <= tol && max_gap_rbridge <= tol,
    })
}

/// Equality-constrained ridge through the full KKT system
/// `[(X'X + lambda I) R'; R 0]`, solved by LU with pivoting.
pub fn solve_equality_ridge_kkt(
    penalized_gram: &Array2<f64>,
    xty: &Array1<f64>,
    rest: &Restriction,
) -> Result<Array1<f64>> {
    let p = penalized_gram.nrows();
    let m = rest.num_constraints();
    let mut kkt = Array2::<f64>::zeros((p + m, p + m));
    for i in 0..p {
        for j in 0..p {
            kkt[[i, j]] = penalized_gram[[i, j]];
        }
    }
    for i in 0..m {
        for j in 0..p {
            kkt[[p + i, j]] = rest.matrix()[[i, j]];
            kkt[[j, p + i]] = rest.matrix()[[i, j]];
        }
    }
    let mut rhs = Array1::<f64>::zeros(p + m);
    for i in 0..p {
        rhs[i] = xty[i];
    }
    for i in 0..m {
        rhs[p + i] = rest.rhs()[i];
    }
    let sol = lu_solve(kkt.view(), rhs.view())
        .ok_or_else(|| Error::SingularSystem("KKT system singular".into()))?;
    Ok(sol.slice(ndarray::s![..p]).to_owned())
}
