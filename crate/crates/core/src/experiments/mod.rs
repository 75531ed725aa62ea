//! Seeded simulation scenarios, evaluation metrics and replication harnesses.

mod arms;
mod split;
mod verify;

pub use arms::{
    bridge_arm, enet_arm, example_arms, oracle_arm, ridge_arm, scad_arm, Arm, TuningSpec,
};
pub use split::{split_arms, split_evaluate, Prior, SplitArm, SplitEvalRow};
pub use verify::{
    consistency_experiment, mse_formula_check, oracle_equivalence_check, ConsistencyReport,
    LambdaRule, MseCheck, OracleEquivReport,
};

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::restriction::{restriction_zeros, Restriction};

/// Split one root seed into independent deterministic streams.
pub(crate) fn derive_seed(root: u64, stream: u64) -> u64 {
    let mut z = root ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The AR(1) correlation matrix with entries `rho^|i-j|`.
pub fn ar1_correlation(p: usize, rho: f64) -> Array2<f64> {
    let mut s = Array2::<f64>::zeros((p, p));
    for i in 0..p {
        for j in 0..p {
            s[[i, j]] = rho.powi((i as i64 - j as i64).unsigned_abs() as i32);
        }
    }
    s
}

/// Rows i.i.d. normal with AR(1) correlation, generated through the process
/// recurrence (the Cholesky factor of the AR(1) matrix in closed form).
pub fn gen_ar1_design(n: usize, p: usize, rho: f64, seed: u64) -> Result<Array2<f64>> {
    if !(rho.abs() < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "AR(1) correlation must satisfy |rho| < 1, got {rho}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let innovation = (1.0 - rho * rho).sqrt();
    let mut x = Array2::<f64>::zeros((n, p));
    for i in 0..n {
        let mut prev: f64 = StandardNormal.sample(&mut rng);
        x[[i, 0]] = prev;
        for j in 1..p {
            let z: f64 = StandardNormal.sample(&mut rng);
            prev = rho * prev + innovation * z;
            x[[i, j]] = prev;
        }
    }
    Ok(x)
}

/// Response draws `y = X b + sigma * z` with standard normal noise.
pub fn gen_response(
    x: ArrayView2<'_, f64>,
    beta_true: ArrayView1<'_, f64>,
    sigma: f64,
    seed: u64,
) -> Result<Array1<f64>> {
    if x.ncols() != beta_true.len() {
        return Err(Error::DimensionMismatch {
            expected: x.ncols(),
            got: beta_true.len(),
            context: "beta vs design columns",
        });
    }
    if !(sigma >= 0.0) {
        return Err(Error::InvalidParameter(format!("sigma must be >= 0, got {sigma}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut y = x.dot(&beta_true);
    if sigma > 0.0 {
        for v in y.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *v += sigma * z;
        }
    }
    Ok(y)
}

/// A simulation design: sample sizes, true coefficients, noise and
/// correlation levels, and the restriction under study.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub label: String,
    pub n: usize,
    pub beta_true: Array1<f64>,
    pub sigma: f64,
    pub rho: f64,
    pub restriction: Restriction,
}

impl Scenario {
    pub fn new(
        label: impl Into<String>,
        n: usize,
        beta_true: Array1<f64>,
        sigma: f64,
        rho: f64,
        restriction: Restriction,
    ) -> Result<Self> {
        if restriction.dim() != beta_true.len() {
            return Err(Error::DimensionMismatch {
                expected: beta_true.len(),
                got: restriction.dim(),
                context: "restriction vs beta dimension",
            });
        }
        if !(rho.abs() < 1.0) {
            return Err(Error::InvalidParameter("need |rho| < 1".into()));
        }
        if !(sigma >= 0.0) {
            return Err(Error::InvalidParameter("need sigma >= 0".into()));
        }
        Ok(Self {
            label: label.into(),
            n,
            beta_true,
            sigma,
            rho,
            restriction,
        })
    }

    pub fn p(&self) -> usize {
        self.beta_true.len()
    }

    /// 0-based indices of truly nonzero coefficients.
    pub fn true_support(&self) -> Vec<usize> {
        (0..self.p()).filter(|&j| self.beta_true[j] != 0.0).collect()
    }

    /// Implied design correlation matrix.
    pub fn correlation(&self) -> Array2<f64> {
        ar1_correlation(self.p(), self.rho)
    }

    /// Draw one `(X, y)` realization.
    pub fn draw(&self, seed: u64) -> Result<Dataset> {
        let x = gen_ar1_design(self.n, self.p(), self.rho, derive_seed(seed, 1))?;
        let y = gen_response(x.view(), self.beta_true.view(), self.sigma, derive_seed(seed, 2))?;
        Dataset::new(x, y, None)
    }
}

/// True coefficients of the p = 8 low-dimensional example.
pub fn example1_beta() -> Array1<f64> {
    Array1::from(vec![3.0, 1.5, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0])
}

/// Restriction of the given case (1..=4) for the p = 8 example: a sum prior,
/// a contrast prior, both stacked, and the zero-selector of the noise
/// coefficients.
pub fn example1_restriction(case: usize) -> Result<Restriction> {
    let sum_row = (vec![1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0], 6.5);
    let contrast_row = (vec![-1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0], 0.5);
    match case {
        1 => crate::restriction::restriction_affine(&[sum_row]),
        2 => crate::restriction::restriction_affine(&[contrast_row]),
        3 => crate::restriction::restriction_affine(&[sum_row, contrast_row]),
        4 => restriction_zeros(&[3, 4, 6, 7, 8], 8),
        _ => Err(Error::InvalidParameter(format!("example 1 case must be 1..=4, got {case}"))),
    }
}

pub fn example1_scenario(case: usize, n: usize, sigma: f64, rho: f64) -> Result<Scenario> {
    if !matches!(n, 40 | 60) {
        return Err(Error::InvalidParameter(format!(
            "example 1 uses n in {{40, 60}}, got {n}"
        )));
    }
    let restriction = example1_restriction(case)?;
    Scenario::new(
        format!("example1-case{case}"),
        n,
        example1_beta(),
        sigma,
        rho,
        restriction,
    )
}

/// True coefficients of the high-dimensional example: blocks of ten zeros,
/// ten twos, ten zeros, ten minus-twos, then zeros.
pub fn example2_beta(p: usize) -> Result<Array1<f64>> {
    if p < 41 {
        return Err(Error::InvalidParameter(format!("example 2 needs p > 40, got {p}")));
    }
    let mut beta = vec![0.0; p];
    for item in beta.iter_mut().take(20).skip(10) {
        *item = 2.0;
    }
    for item in beta.iter_mut().take(40).skip(30) {
        *item = -2.0;
    }
    Ok(Array1::from(beta))
}

/// Restriction of the given case for the high-dimensional example. Cases 1-2
/// constrain the zero block (exact prior, then one violated by 0.1); cases
/// 3-4 pin the nonzero block to its true values, then to values off by 0.1.
pub fn example2_restriction(case: usize, p: usize) -> Result<Restriction> {
    if p < 41 {
        return Err(Error::InvalidParameter(format!("example 2 needs p > 40, got {p}")));
    }
    let zero_block: Vec<usize> = (1..=10).chain(21..=30).chain(41..=p).collect();
    let nonzero_block: Vec<usize> = (11..=20).chain(31..=40).collect();
    let selector = |idx: &[usize]| -> Array2<f64> {
        let mut m = Array2::<f64>::zeros((idx.len(), p));
        for (row, &i) in idx.iter().enumerate() {
            m[[row, i - 1]] = 1.0;
        }
        m
    };
    match case {
        1 => restriction_zeros(&zero_block, p),
        2 => Restriction::new(
            selector(&zero_block),
            Array1::from_elem(zero_block.len(), 0.1),
        ),
        3 | 4 => {
            let offset = if case == 4 { 0.1 } else { 0.0 };
            let mut rhs = Array1::<f64>::zeros(20);
            for i in 0..10 {
                rhs[i] = 2.0 + offset;
                rhs[10 + i] = -2.0 - offset;
            }
            Restriction::new(selector(&nonzero_block), rhs)
        }
        _ => Err(Error::InvalidParameter(format!("example 2 case must be 1..=4, got {case}"))),
    }
}

pub fn example2_scenario(case: usize, p: usize, sigma: f64, rho: f64) -> Result<Scenario> {
    if !matches!(p, 100 | 200) {
        return Err(Error::InvalidParameter(format!(
            "example 2 uses p in {{100, 200}}, got {p}"
        )));
    }
    let restriction = example2_restriction(case, p)?;
    Scenario::new(
        format!("example2-case{case}"),
        50,
        example2_beta(p)?,
        sigma,
        rho,
        restriction,
    )
}

/// Model error `(bh - b)' Sigma (bh - b)`.
pub fn model_error(
    beta_hat: ArrayView1<'_, f64>,
    beta_true: ArrayView1<'_, f64>,
    sigma: ArrayView2<'_, f64>,
) -> Result<f64> {
    let p = beta_true.len();
    if beta_hat.len() != p || sigma.nrows() != p || sigma.ncols() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: beta_hat.len(),
            context: "model error dimensions",
        });
    }
    let delta = &beta_hat - &beta_true;
    Ok(delta.dot(&sigma.dot(&delta)))
}

/// Under / correct / over fit classification of a selected model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitClass {
    /// At least one truly nonzero coefficient was estimated as zero.
    Under,
    /// The estimated support equals the true support exactly.
    Correct,
    /// All signals kept, plus at least one noise coefficient.
    Over,
}

/// Count correctly zeroed noise coefficients (`C`), incorrectly zeroed
/// signal coefficients (`IC`), and classify the fit.
pub fn selection_metrics(
    beta_hat: ArrayView1<'_, f64>,
    true_support: &[usize],
) -> (usize, usize, FitClass) {
    assert!(!true_support.is_empty(), "true support must be non-empty");
    let p = beta_hat.len();
    let is_signal = |j: usize| true_support.contains(&j);
    let mut c = 0usize;
    let mut ic = 0usize;
    for j in 0..p {
        if beta_hat[j] == 0.0 {
            if is_signal(j) {
                ic += 1;
            } else {
                c += 1;
            }
        }
    }
    let class = if ic > 0 {
        FitClass::Under
    } else if c == p - true_support.len() {
        FitClass::Correct
    } else {
        FitClass::Over
    };
    (c, ic, class)
}

/// Aggregated selection and estimation metrics over replications.
#[derive(Debug, Clone)]
pub struct MetricsSummary {
    /// Median model error.
    pub mme: f64,
    /// Mean count of correctly zeroed noise coefficients.
    pub c: f64,
    /// Mean count of incorrectly zeroed signal coefficients.
    pub ic: f64,
    pub u_fit: f64,
    pub c_fit: f64,
    pub o_fit: f64,
    /// Replications attempted.
    pub nreps: usize,
    /// Replications dropped because the estimator failed.
    pub failures: usize,
}

/// Per-arm outcome of [`run_replications`], with the raw model errors kept
/// for external box plots.
#[derive(Debug, Clone)]
pub struct ArmSummary {
    pub label: String,
    pub summary: MetricsSummary,
    /// `(replication index, model error)` for each successful replication.
    pub raw_me: Vec<(usize, f64)>,
}

/// Proportions of under / correct / over fits. The classes partition
/// outcomes; the last proportion is the complement of the other two, which
/// keeps the float identity `u + c + o == 1` exact.
pub fn fit_proportions(under: usize, correct: usize, successes: usize) -> (f64, f64, f64) {
    assert!(under + correct <= successes && successes > 0);
    let sf = successes as f64;
    let u = under as f64 / sf;
    let c = correct as f64 / sf;
    let o = 1.0 - (u + c);
    (u, c, o)
}

pub(crate) fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty());
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Run every estimator arm on identically seeded replications of a scenario.
/// Replication `r` uses seed `seed XOR r`, so all arms see the same data and
/// reruns are reproducible.
pub fn run_replications(
    scenario: &Scenario,
    arms: &[Arm],
    nreps: usize,
    seed: u64,
) -> Result<Vec<ArmSummary>> {
    if nreps < 1 {
        return Err(Error::InvalidParameter("nreps must be >= 1".into()));
    }
    let support = scenario.true_support();
    let correlation = scenario.correlation();

    struct Acc {
        mes: Vec<(usize, f64)>,
        c_sum: usize,
        ic_sum: usize,
        under: usize,
        correct: usize,
        failures: usize,
    }
    let mut accs: Vec<Acc> = arms
        .iter()
        .map(|_| Acc {
            mes: Vec::with_capacity(nreps),
            c_sum: 0,
            ic_sum: 0,
            under: 0,
            correct: 0,
            failures: 0,
        })
        .collect();

    for r in 0..nreps {
        let rep_seed = seed ^ (r as u64);
        let data = scenario.draw(rep_seed)?;
        let tuning_seed = derive_seed(rep_seed, 3);
        for (arm, acc) in arms.iter().zip(accs.iter_mut()) {
            match arm.fit(&data, tuning_seed) {
                Ok(beta) => {
                    let me = model_error(
                        beta.view(),
                        scenario.beta_true.view(),
                        correlation.view(),
                    )?;
                    let (c, ic, class) = selection_metrics(beta.view(), &support);
                    acc.mes.push((r, me));
                    acc.c_sum += c;
                    acc.ic_sum += ic;
                    match class {
                        FitClass::Under => acc.under += 1,
                        FitClass::Correct => acc.correct += 1,
                        FitClass::Over => {}
                    }
                }
                Err(_) => acc.failures += 1,
            }
        }
    }

    let mut out = Vec::with_capacity(arms.len());
    for (arm, acc) in arms.iter().zip(accs.into_iter()) {
        let successes = acc.mes.len();
        if successes == 0 {
            return Err(Error::InvalidData(format!(
                "estimator '{}' failed on every replication",
                arm.label()
            )));
        }
        let sf = successes as f64;
        let mes: Vec<f64> = acc.mes.iter().map(|(_, me)| *me).collect();
        let (u_fit, c_fit, o_fit) = fit_proportions(acc.under, acc.correct, successes);
        out.push(ArmSummary {
            label: arm.label().to_string(),
            summary: MetricsSummary {
                mme: median(&mes),
                c: acc.c_sum as f64 / sf,
                ic: acc.ic_sum as f64 / sf,
                u_fit,
                c_fit,
                o_fit,
                nreps,
                failures: acc.failures,
            },
            raw_me: acc.mes,
        });
    }
    Ok(out)
}
