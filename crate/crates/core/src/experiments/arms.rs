//! Estimator arms: named closures that tune themselves by cross-validation
//! on whatever data they are handed, so simulation replications and data
//! splits can treat every method uniformly.

use ndarray::Array1;

use crate::baselines::{fit_enet, fit_ridge, fit_scad, CdOptions};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::restriction::Restriction;
use crate::selection::{cross_validate, cross_validate_bridge, default_lambda_grid, CvGrid};
use crate::solver::{fit_bridge, fit_rbridge, ols, SolverOptions};
use crate::PenaltySpec;

/// Tuning protocol shared by all arms.
#[derive(Debug, Clone)]
pub struct TuningSpec {
    /// Cross-validation folds.
    pub k: usize,
    /// Size of the default log-spaced lambda grid.
    pub n_lambda: usize,
    /// Bridge exponent grid.
    pub qs: Vec<f64>,
    /// Elastic-net mixing grid.
    pub alphas: Vec<f64>,
    /// Skip cross-validation and use these `(lambda, q)` directly.
    pub fixed: Option<(f64, f64)>,
}

impl Default for TuningSpec {
    fn default() -> Self {
        Self {
            k: 10,
            n_lambda: 15,
            qs: CvGrid::default_qs(),
            alphas: vec![0.2, 0.4, 0.6, 0.8],
            fixed: None,
        }
    }
}

/// A labeled estimator: data plus a tuning seed in, coefficients out.
pub struct Arm {
    label: String,
    fit: Box<dyn Fn(&Dataset, u64) -> Result<Array1<f64>> + Send + Sync>,
}

impl Arm {
    pub fn new(
        label: impl Into<String>,
        fit: impl Fn(&Dataset, u64) -> Result<Array1<f64>> + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            fit: Box::new(fit),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn fit(&self, d: &Dataset, seed: u64) -> Result<Array1<f64>> {
        (self.fit)(d, seed)
    }
}

fn drop_nonconverged(beta: Array1<f64>, converged: bool) -> Result<Array1<f64>> {
    if converged {
        Ok(beta)
    } else {
        Err(Error::SingularSystem("fit did not converge".into()))
    }
}

/// Cross-validated (restricted) bridge fit on a given dataset.
pub(crate) fn tune_and_fit_bridge(
    d: &Dataset,
    rest: Option<&Restriction>,
    tuning: &TuningSpec,
    opts: &SolverOptions,
    seed: u64,
) -> Result<Array1<f64>> {
    let (lambda, q) = match tuning.fixed {
        Some(pair) => pair,
        None => {
            let grid = CvGrid::new(
                default_lambda_grid(d, tuning.n_lambda)?,
                tuning.qs.clone(),
                tuning.k,
            )?;
            let res = cross_validate_bridge(d, &grid, rest, opts, seed)?;
            (res.best_lambda, res.best_q)
        }
    };
    let pen = PenaltySpec::bridge(q, lambda)?;
    let fit = match rest {
        Some(r) => fit_rbridge(d, &pen, r, opts)?,
        None => fit_bridge(d, &pen, opts)?,
    };
    Ok(fit.beta)
}

/// Cross-validated elastic net at a fixed mixing value.
pub(crate) fn tune_and_fit_enet_at(
    d: &Dataset,
    alpha: f64,
    tuning: &TuningSpec,
    seed: u64,
) -> Result<Array1<f64>> {
    let lambda = match tuning.fixed {
        Some((l, _)) => l,
        None => {
            let grid = CvGrid::new(
                default_lambda_grid(d, tuning.n_lambda)?,
                vec![1.0],
                tuning.k,
            )?;
            let cd = CdOptions::default();
            let fitter = |train: &Dataset, l: f64, _q: f64| -> Result<Array1<f64>> {
                let fit = fit_enet(train, l, alpha, &cd)?;
                drop_nonconverged(fit.beta, fit.converged)
            };
            cross_validate(&fitter, d, &grid, seed)?.best_lambda
        }
    };
    let fit = fit_enet(d, lambda, alpha, &CdOptions::default())?;
    Ok(fit.beta)
}

/// Elastic net with the mixing value chosen from `tuning.alphas` by the
/// smallest cross-validation error.
pub(crate) fn tune_and_fit_enet(
    d: &Dataset,
    tuning: &TuningSpec,
    seed: u64,
) -> Result<Array1<f64>> {
    if let Some((lambda, _)) = tuning.fixed {
        let alpha = tuning.alphas.first().copied().unwrap_or(0.5);
        return Ok(fit_enet(d, lambda, alpha, &CdOptions::default())?.beta);
    }
    let grid = CvGrid::new(
        default_lambda_grid(d, tuning.n_lambda)?,
        vec![1.0],
        tuning.k,
    )?;
    let cd = CdOptions::default();
    let mut best: Option<(f64, f64, f64)> = None; // (cve, alpha, lambda)
    for &alpha in &tuning.alphas {
        let fitter = |train: &Dataset, l: f64, _q: f64| -> Result<Array1<f64>> {
            let fit = fit_enet(train, l, alpha, &cd)?;
            drop_nonconverged(fit.beta, fit.converged)
        };
        let res = match cross_validate(&fitter, d, &grid, seed) {
            Ok(r) => r,
            Err(Error::AllGridPointsFailed) => continue,
            Err(e) => return Err(e),
        };
        let cve = res.min_cve();
        match best {
            Some((cur, _, _)) if cve >= cur => {}
            _ => best = Some((cve, alpha, res.best_lambda)),
        }
    }
    let (_, alpha, lambda) = best.ok_or(Error::AllGridPointsFailed)?;
    Ok(fit_enet(d, lambda, alpha, &CdOptions::default())?.beta)
}

/// Lambda path of the ridge comparison arm, following the reference
/// coordinate-descent package's alpha = 0 convention: the path top is the
/// lasso lambda-max divided by a 0.001 floor in place of alpha, and the
/// bottom sits at 1e-4 of the top when n > p and at 1e-2 otherwise. Ridge
/// therefore never reaches near-zero penalties on p > n data.
fn ridge_lambda_grid(d: &Dataset, count: usize) -> Result<Vec<f64>> {
    let base = default_lambda_grid(d, 2)?;
    let lambda_max = base[0] / (2.0 * 0.001);
    let ratio = if d.n() > d.p() { 1e-4 } else { 1e-2 };
    let (log_max, log_min) = (lambda_max.ln(), (lambda_max * ratio).ln());
    Ok((0..count.max(2))
        .map(|i| {
            let t = i as f64 / (count.max(2) - 1) as f64;
            (log_max + t * (log_min - log_max)).exp()
        })
        .collect())
}

pub(crate) fn tune_and_fit_ridge(d: &Dataset, tuning: &TuningSpec, seed: u64) -> Result<Array1<f64>> {
    let lambda = match tuning.fixed {
        Some((l, _)) => l,
        None => {
            let grid = CvGrid::new(ridge_lambda_grid(d, tuning.n_lambda)?, vec![1.0], tuning.k)?;
            let fitter = |train: &Dataset, l: f64, _q: f64| -> Result<Array1<f64>> {
                Ok(fit_ridge(train, l)?.beta)
            };
            cross_validate(&fitter, d, &grid, seed)?.best_lambda
        }
    };
    Ok(fit_ridge(d, lambda)?.beta)
}

pub(crate) fn tune_and_fit_scad(
    d: &Dataset,
    a: f64,
    tuning: &TuningSpec,
    opts: &SolverOptions,
    seed: u64,
) -> Result<Array1<f64>> {
    let lambda = match tuning.fixed {
        Some((l, _)) => l,
        None => {
            let grid = CvGrid::new(
                default_lambda_grid(d, tuning.n_lambda)?,
                vec![1.0],
                tuning.k,
            )?;
            let fitter = |train: &Dataset, l: f64, _q: f64| -> Result<Array1<f64>> {
                let fit = fit_scad(train, l, a, opts)?;
                drop_nonconverged(fit.beta, fit.converged)
            };
            cross_validate(&fitter, d, &grid, seed)?.best_lambda
        }
    };
    Ok(fit_scad(d, lambda, a, opts)?.beta)
}

pub fn bridge_arm(
    label: impl Into<String>,
    rest: Option<Restriction>,
    tuning: TuningSpec,
    opts: SolverOptions,
) -> Arm {
    Arm::new(label, move |d, seed| {
        tune_and_fit_bridge(d, rest.as_ref(), &tuning, &opts, seed)
    })
}

pub fn enet_arm(label: impl Into<String>, alpha: Option<f64>, tuning: TuningSpec) -> Arm {
    Arm::new(label, move |d, seed| match alpha {
        Some(a) => tune_and_fit_enet_at(d, a, &tuning, seed),
        None => tune_and_fit_enet(d, &tuning, seed),
    })
}

pub fn ridge_arm(label: impl Into<String>, tuning: TuningSpec) -> Arm {
    Arm::new(label, move |d, seed| tune_and_fit_ridge(d, &tuning, seed))
}

pub fn scad_arm(label: impl Into<String>, a: f64, tuning: TuningSpec, opts: SolverOptions) -> Arm {
    Arm::new(label, move |d, seed| {
        tune_and_fit_scad(d, a, &tuning, &opts, seed)
    })
}

/// Least squares on the true support: the infeasible benchmark.
pub fn oracle_arm(label: impl Into<String>, support: Vec<usize>) -> Arm {
    Arm::new(label, move |d, _seed| ols(d, Some(&support)))
}

/// The standard ten-arm comparison: lasso, ridge, elastic net, SCAD, the
/// oracle, the unrestricted bridge, and one restricted bridge per prior.
pub fn example_arms(
    true_support: Vec<usize>,
    restrictions: Vec<(String, Restriction)>,
    tuning: &TuningSpec,
    opts: &SolverOptions,
) -> Vec<Arm> {
    let mut arms = vec![
        enet_arm("LASSO", Some(1.0), tuning.clone()),
        ridge_arm("RIDGE", tuning.clone()),
        enet_arm("E-NET", None, tuning.clone()),
        scad_arm("SCAD", 3.7, tuning.clone(), opts.clone()),
        oracle_arm("ORACLE", true_support),
        bridge_arm("BRIDGE", None, tuning.clone(), opts.clone()),
    ];
    for (label, rest) in restrictions {
        arms.push(bridge_arm(label, Some(rest), tuning.clone(), opts.clone()));
    }
    arms
}
