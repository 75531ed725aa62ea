//! Penalized regression with linear equality restrictions.
//!
//! The centerpiece is the restricted bridge estimator: Lq-penalized least
//! squares solved by local quadratic approximation, projected onto a
//! constraint set `R b = r` through a closed-form correction. Around it the
//! crate provides comparison estimators (ridge, lasso / elastic net by
//! coordinate descent, SCAD), K-fold cross-validation over joint
//! `(lambda, q)` grids, seeded simulation and data-splitting harnesses, and
//! executable verifiers for the estimator's analytic mean squared error and
//! its consistency.

pub mod baselines;
pub mod data;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod penalty;
pub mod restriction;
pub mod selection;
pub mod solver;

pub use data::{destandardize, load_csv, standardize, standardize_with, Dataset, ScaleDivisor, StandardizationRecord};
pub use error::{Error, Result};
pub use penalty::{PenaltyFamily, PenaltySpec};
pub use restriction::{
    load_restriction, restriction_affine, restriction_zeros, transform_restriction, Restriction,
};
pub use solver::{
    analytic_mse, fit_bridge, fit_rbridge, ols, penalty_weights, restricted_correction,
    ridge_init, FitResult, Init, LqaSystem, SolverOptions,
};
