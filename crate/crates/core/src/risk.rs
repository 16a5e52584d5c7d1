//! Risk over the type prior.
//!
//! For a fixed policy profile a player's utility is a discrete random variable
//! with one atom per type pair `(j, k)`: value `u[j][k]`, mass `ξ[j][k]`.
//! CVaR at level α is the mean of the worst α-probability tail of that
//! distribution (smaller utility is worse). It is computed as an ordinary
//! expectation under reweighted masses, the distortion weights, which the
//! gradient code reuses as fixed mixing coefficients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default CVaR level used throughout the experiments.
pub const DEFAULT_ALPHA: f64 = 0.25;

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteUtilityDist {
    values: Vec<f64>,
    probs: Vec<f64>,
}

impl DiscreteUtilityDist {
    pub fn new(values: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if values.len() != probs.len() {
            return Err(Error::ShapeMismatch {
                expected: values.len(),
                got: probs.len(),
            });
        }
        let sum: f64 = probs.iter().sum();
        if probs.iter().any(|p| !(*p >= 0.0)) || (sum - 1.0).abs() > crate::game::PROB_TOL {
            return Err(Error::NonStochasticRow {
                what: "utility distribution",
                index: vec![],
                sum,
            });
        }
        Ok(DiscreteUtilityDist { values, probs })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        dot(&self.probs, &self.values)
    }
}

/// Flattens a row-major `K×K` utility grid and prior into atoms, `m = j·K + k`.
pub fn dist_from_matrix(u: &[f64], xi: &[f64]) -> Result<DiscreteUtilityDist> {
    if u.len() != xi.len() {
        return Err(Error::ShapeMismatch {
            expected: u.len(),
            got: xi.len(),
        });
    }
    DiscreteUtilityDist::new(u.to_vec(), xi.to_vec())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidAlpha(alpha))
    }
}

/// Tail weights whose expectation equals CVaR_α.
///
/// Atoms are visited in ascending value order (ties by original index) and
/// absorb mass until α is used up; the boundary atom receives a fractional
/// share. Weights are returned in the original atom order.
pub fn distortion_weights(d: &DiscreteUtilityDist, alpha: f64) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    if alpha == 1.0 {
        return Ok(d.probs.clone());
    }
    let mut order: Vec<usize> = (0..d.len()).collect();
    order.sort_by(|&a, &b| d.values[a].total_cmp(&d.values[b]).then(a.cmp(&b)));

    let mut weights = vec![0.0; d.len()];
    let mut remaining = alpha;
    for idx in order {
        if remaining <= 0.0 {
            break;
        }
        let take = remaining.min(d.probs[idx]);
        weights[idx] = take / alpha;
        remaining -= take;
    }
    Ok(weights)
}

pub fn cvar(d: &DiscreteUtilityDist, alpha: f64) -> Result<f64> {
    let w = distortion_weights(d, alpha)?;
    Ok(dot(&w, &d.values))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RiskMeasure {
    Expectation,
    Cvar { alpha: f64 },
}

impl RiskMeasure {
    pub fn cvar(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(RiskMeasure::Cvar { alpha })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            RiskMeasure::Expectation => Ok(()),
            RiskMeasure::Cvar { alpha } => check_alpha(alpha),
        }
    }

    pub fn is_risk_sensitive(&self) -> bool {
        matches!(self, RiskMeasure::Cvar { .. })
    }

    /// Risk-adjusted value of `d` and the weights realizing it.
    pub fn apply(&self, d: &DiscreteUtilityDist) -> Result<(f64, Vec<f64>)> {
        match *self {
            RiskMeasure::Expectation => Ok((d.mean(), d.probs.clone())),
            RiskMeasure::Cvar { alpha } => {
                let w = distortion_weights(d, alpha)?;
                Ok((dot(&w, &d.values), w))
            }
        }
    }

    pub fn value(&self, d: &DiscreteUtilityDist) -> Result<f64> {
        self.apply(d).map(|(v, _)| v)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
