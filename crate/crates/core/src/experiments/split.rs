//! Repeated random-split evaluation on real data: median held-out prediction
//! error, distances to prior coefficient vectors, and model sizes.

use ndarray::Array1;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{standardize_with, Dataset, ScaleDivisor, StandardizationRecord};
use crate::error::{Error, Result};
use crate::experiments::arms::{
    tune_and_fit_bridge, tune_and_fit_enet, tune_and_fit_enet_at, tune_and_fit_ridge,
    tune_and_fit_scad, TuningSpec,
};
use crate::experiments::{derive_seed, median};
use crate::restriction::{transform_restriction, Restriction};
use crate::solver::SolverOptions;

/// A prior coefficient vector together with the restriction that encodes it.
/// Both live on the scale of the dataset handed to [`split_evaluate`].
#[derive(Debug, Clone)]
pub struct Prior {
    pub label: String,
    pub restriction: Restriction,
    pub beta: Array1<f64>,
}

/// An estimator evaluated under data splitting. The closure receives the
/// standardized training half plus the record that produced it, so
/// restriction-based arms can transport their priors onto the training scale.
pub struct SplitArm {
    label: String,
    fit: Box<dyn Fn(&Dataset, &StandardizationRecord, u64) -> Result<Array1<f64>> + Send + Sync>,
}

impl SplitArm {
    pub fn new(
        label: impl Into<String>,
        fit: impl Fn(&Dataset, &StandardizationRecord, u64) -> Result<Array1<f64>>
            + Send
            + Sync
            + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            fit: Box::new(fit),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

/// One output row: medians over splits, with ratio columns normalized by the
/// per-column minimum (the best estimator reads exactly 1).
#[derive(Debug, Clone)]
pub struct SplitEvalRow {
    pub label: String,
    pub mse_y: f64,
    pub rmse_y: f64,
    pub mse_beta0: Vec<f64>,
    pub rmse_beta0: Vec<f64>,
    pub n_vars: f64,
    pub failures: usize,
}

/// Standard arm set for real-data comparisons: lasso, ridge, elastic net,
/// SCAD, the unrestricted bridge, and one restricted bridge per prior.
pub fn split_arms(priors: &[Prior], tuning: &TuningSpec, opts: &SolverOptions) -> Vec<SplitArm> {
    let mut arms: Vec<SplitArm> = Vec::new();
    {
        let t = tuning.clone();
        arms.push(SplitArm::new("LASSO", move |d, _rec, seed| {
            tune_and_fit_enet_at(d, 1.0, &t, seed)
        }));
    }
    {
        let t = tuning.clone();
        arms.push(SplitArm::new("RIDGE", move |d, _rec, seed| {
            tune_and_fit_ridge(d, &t, seed)
        }));
    }
    {
        let t = tuning.clone();
        arms.push(SplitArm::new("E-NET", move |d, _rec, seed| {
            tune_and_fit_enet(d, &t, seed)
        }));
    }
    {
        let t = tuning.clone();
        let o = opts.clone();
        arms.push(SplitArm::new("SCAD", move |d, _rec, seed| {
            tune_and_fit_scad(d, 3.7, &t, &o, seed)
        }));
    }
    {
        let t = tuning.clone();
        let o = opts.clone();
        arms.push(SplitArm::new("BRIDGE", move |d, _rec, seed| {
            tune_and_fit_bridge(d, None, &t, &o, seed)
        }));
    }
    for (i, prior) in priors.iter().enumerate() {
        let t = tuning.clone();
        let o = opts.clone();
        let rest = prior.restriction.clone();
        let label = if prior.label.is_empty() {
            format!("RBRIDGE{}", i + 1)
        } else {
            format!("RBRIDGE-{}", prior.label)
        };
        arms.push(SplitArm::new(label, move |d, rec, seed| {
            let local = transform_restriction(&rest, rec)?;
            tune_and_fit_bridge(d, Some(&local), &t, &o, seed)
        }));
    }
    arms
}

/// Repeatedly split the data in half, fit every arm on the standardized
/// training part, and report median test error, median squared distance to
/// each prior, and the median selected-model size.
pub fn split_evaluate(
    d: &Dataset,
    arms: &[SplitArm],
    priors: &[Prior],
    nreps: usize,
    seed: u64,
) -> Result<Vec<SplitEvalRow>> {
    if d.n() < 4 {
        return Err(Error::InvalidData("need at least 4 observations to split".into()));
    }
    if nreps < 1 {
        return Err(Error::InvalidParameter("nreps must be >= 1".into()));
    }
    for prior in priors {
        if prior.beta.len() != d.p() || prior.restriction.dim() != d.p() {
            return Err(Error::DimensionMismatch {
                expected: d.p(),
                got: prior.beta.len(),
                context: "prior vs dataset columns",
            });
        }
    }

    let n = d.n();
    let n_train = n.div_ceil(2);

    struct Acc {
        mse_y: Vec<f64>,
        mse_b: Vec<Vec<f64>>,
        n_vars: Vec<f64>,
        failures: usize,
    }
    let mut accs: Vec<Acc> = arms
        .iter()
        .map(|_| Acc {
            mse_y: Vec::with_capacity(nreps),
            mse_b: vec![Vec::with_capacity(nreps); priors.len()],
            n_vars: Vec::with_capacity(nreps),
            failures: 0,
        })
        .collect();

    for rep in 0..nreps {
        let rep_seed = seed ^ (rep as u64);
        // resample the split if the training half has a constant column
        let mut split = None;
        for attempt in 0..100u64 {
            let mut order: Vec<usize> = (0..n).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(rep_seed, 1 + attempt));
            order.shuffle(&mut rng);
            let train_rows = &order[..n_train];
            let test_rows = &order[n_train..];
            let train = d.select_rows(train_rows)?;
            match standardize_with(&train, ScaleDivisor::N) {
                Ok((train_std, rec)) => {
                    split = Some((train_std, rec, test_rows.to_vec()));
                    break;
                }
                Err(Error::ConstantColumn(_)) => continue,
                Err(e) => return Err(e),
            }
        }
        let (train_std, rec, test_rows) =
            split.ok_or_else(|| Error::InvalidData("could not find a non-degenerate split".into()))?;
        let tuning_seed = derive_seed(rep_seed, 2);

        for (arm, acc) in arms.iter().zip(accs.iter_mut()) {
            let beta_std = match (arm.fit)(&train_std, &rec, tuning_seed) {
                Ok(b) => b,
                Err(_) => {
                    acc.failures += 1;
                    continue;
                }
            };
            // map to the input scale: slope_j = scale_j * beta_j and the
            // intercept recenters train means
            let slopes = &beta_std * &rec.x_scales;
            let intercept = rec.y_mean - rec.x_means.dot(&slopes);
            let mut sse = 0.0;
            for &row in &test_rows {
                let pred = intercept + d.x().row(row).dot(&slopes);
                let r = d.y()[row] - pred;
                sse += r * r;
            }
            acc.mse_y.push(sse);
            for (pi, prior) in priors.iter().enumerate() {
                let delta = &prior.beta - &slopes;
                acc.mse_b[pi].push(delta.dot(&delta));
            }
            acc.n_vars.push(beta_std.iter().filter(|v| **v != 0.0).count() as f64);
        }
    }

    let mut rows: Vec<SplitEvalRow> = Vec::with_capacity(arms.len());
    for (arm, acc) in arms.iter().zip(accs.iter()) {
        if acc.mse_y.is_empty() {
            return Err(Error::InvalidData(format!(
                "estimator '{}' failed on every split",
                arm.label()
            )));
        }
        rows.push(SplitEvalRow {
            label: arm.label().to_string(),
            mse_y: median(&acc.mse_y),
            rmse_y: f64::NAN,
            mse_beta0: acc.mse_b.iter().map(|v| median(v)).collect(),
            rmse_beta0: vec![f64::NAN; priors.len()],
            n_vars: median(&acc.n_vars),
            failures: acc.failures,
        });
    }

    // normalize ratio columns by the column minimum
    let min_y = rows.iter().map(|r| r.mse_y).fold(f64::INFINITY, f64::min);
    for row in rows.iter_mut() {
        row.rmse_y = row.mse_y / min_y;
    }
    for pi in 0..priors.len() {
        let min_b = rows
            .iter()
            .map(|r| r.mse_beta0[pi])
            .fold(f64::INFINITY, f64::min);
        for row in rows.iter_mut() {
            row.rmse_beta0[pi] = row.mse_beta0[pi] / min_b;
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{gen_ar1_design, gen_response};
    use crate::restriction::restriction_zeros;
    use ndarray::array;

    fn toy_data(n: usize, seed: u64) -> Dataset {
        let x = gen_ar1_design(n, 4, 0.3, seed).unwrap();
        let beta = array![2.0, 0.0, -1.0, 0.0];
        let y = gen_response(x.view(), beta.view(), 0.5, seed ^ 0xabc).unwrap();
        Dataset::new(x, y, None).unwrap()
    }

    #[test]
    fn rmse_minimum_is_exactly_one() {
        let d = toy_data(24, 5);
        let prior = Prior {
            label: "zeros".into(),
            restriction: restriction_zeros(&[2, 4], 4).unwrap(),
            beta: array![2.0, 0.0, -1.0, 0.0],
        };
        let tuning = TuningSpec {
            k: 4,
            n_lambda: 5,
            qs: vec![1.0],
            alphas: vec![0.5],
            fixed: None,
        };
        let arms = split_arms(std::slice::from_ref(&prior), &tuning, &SolverOptions::default());
        let rows = split_evaluate(&d, &arms, &[prior], 9, 77).unwrap();
        let ones_y = rows.iter().filter(|r| r.rmse_y == 1.0).count();
        assert_eq!(ones_y, 1, "exactly one estimator attains the minimum");
        assert!(rows.iter().all(|r| r.rmse_y >= 1.0));
        let ones_b = rows.iter().filter(|r| r.rmse_beta0[0] == 1.0).count();
        assert_eq!(ones_b, 1);
        assert!(rows.iter().all(|r| r.rmse_beta0[0] >= 1.0));
    }

    #[test]
    fn dense_ridge_reports_all_variables() {
        let d = toy_data(20, 9);
        let tuning = TuningSpec {
            k: 4,
            n_lambda: 4,
            qs: vec![1.0],
            alphas: vec![0.5],
            fixed: None,
        };
        let arms = vec![SplitArm::new("RIDGE", {
            let t = tuning.clone();
            move |d: &Dataset, _rec: &StandardizationRecord, seed: u64| {
                tune_and_fit_ridge(d, &t, seed)
            }
        })];
        let rows = split_evaluate(&d, &arms, &[], 3, 11).unwrap();
        assert_eq!(rows[0].n_vars, 4.0);
    }

    #[test]
    fn split_determinism() {
        let d = toy_data(20, 13);
        let tuning = TuningSpec {
            k: 4,
            n_lambda: 4,
            qs: vec![1.0],
            alphas: vec![0.5],
            fixed: None,
        };
        let arms1 = split_arms(&[], &tuning, &SolverOptions::default());
        let arms2 = split_arms(&[], &tuning, &SolverOptions::default());
        let r1 = split_evaluate(&d, &arms1, &[], 5, 99).unwrap();
        let r2 = split_evaluate(&d, &arms2, &[], 5, 99).unwrap();
        for (a, b) in r1.iter().zip(r2.iter()) {
            assert_eq!(a.mse_y.to_bits(), b.mse_y.to_bits());
        }
    }
}
