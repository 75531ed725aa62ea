//! Penalty families and their objective values.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Supported penalty families.
///
/// The elastic-net convention here is `lambda * (alpha*|b|_1 + (1-alpha)*|b|_2^2)`,
/// so `alpha = 1` is the lasso and `alpha = 0` is ridge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PenaltyFamily {
    Bridge { q: f64 },
    ElasticNet { alpha: f64 },
    Scad { a: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltySpec {
    #[serde(flatten)]
    pub family: PenaltyFamily,
    pub lambda: f64,
}

impl PenaltySpec {
    pub fn bridge(q: f64, lambda: f64) -> Result<Self> {
        if !(q > 0.0) {
            return Err(Error::InvalidParameter(format!("bridge exponent q must be > 0, got {q}")));
        }
        Self::validated(PenaltyFamily::Bridge { q }, lambda)
    }

    pub fn elastic_net(alpha: f64, lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidParameter(format!(
                "elastic net alpha must be in [0, 1], got {alpha}"
            )));
        }
        Self::validated(PenaltyFamily::ElasticNet { alpha }, lambda)
    }

    pub fn scad(a: f64, lambda: f64) -> Result<Self> {
        if !(a > 2.0) {
            return Err(Error::InvalidParameter(format!("scad shape a must be > 2, got {a}")));
        }
        Self::validated(PenaltyFamily::Scad { a }, lambda)
    }

    fn validated(family: PenaltyFamily, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!("lambda must be >= 0, got {lambda}")));
        }
        Ok(Self { family, lambda })
    }

    /// Penalty value at a coefficient vector.
    pub fn penalty_value(&self, beta: &[f64]) -> f64 {
        match self.family {
            PenaltyFamily::Bridge { q } => {
                self.lambda * beta.iter().map(|b| b.abs().powf(q)).sum::<f64>()
            }
            PenaltyFamily::ElasticNet { alpha } => {
                let l1: f64 = beta.iter().map(|b| b.abs()).sum();
                let l2: f64 = beta.iter().map(|b| b * b).sum();
                self.lambda * (alpha * l1 + (1.0 - alpha) * l2)
            }
            PenaltyFamily::Scad { a } => beta
                .iter()
                .map(|b| scad_value(b.abs(), self.lambda, a))
                .sum(),
        }
    }

    /// Bridge exponent, when this is a bridge penalty.
    pub fn bridge_q(&self) -> Option<f64> {
        match self.family {
            PenaltyFamily::Bridge { q } => Some(q),
            _ => None,
        }
    }
}

/// The SCAD penalty function at `t = |b| >= 0`: linear up to `lambda`,
/// quadratic blend up to `a*lambda`, constant beyond.
pub fn scad_value(t: f64, lambda: f64, a: f64) -> f64 {
    debug_assert!(t >= 0.0);
    if t <= lambda {
        lambda * t
    } else if t < a * lambda {
        let num = 2.0 * a * lambda * t - t * t - lambda * lambda;
        num / (2.0 * (a - 1.0))
    } else {
        lambda * lambda * (a + 1.0) / 2.0
    }
}

/// The SCAD penalty derivative at `t = |b| >= 0`.
pub fn scad_derivative(t: f64, lambda: f64, a: f64) -> f64 {
    debug_assert!(t >= 0.0);
    if t <= lambda {
        lambda
    } else if t < a * lambda {
        (a * lambda - t) / (a - 1.0)
    } else {
        0.0
    }
}
