use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `sum == 1` accepted for externally supplied distributions.
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// Normalized, non-negative output powers over `N` ports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PowerDistribution(Vec<f64>);

impl PowerDistribution {
    /// Validates an already-normalized vector.
    pub fn new(probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.is_empty() {
            return Err(Error::domain("power distribution is empty"));
        }
        if let Some(p) = probabilities.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::domain(format!("power entry {p} is negative or non-finite")));
        }
        let sum: f64 = probabilities.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::domain(format!("power distribution sums to {sum}, expected 1")));
        }
        Ok(Self(probabilities))
    }

    /// Scales arbitrary non-negative weights to unit sum.
    pub fn normalized(weights: Vec<f64>) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::domain(format!("weight {w} is negative or non-finite")));
        }
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 {
            return Err(Error::domain("weights sum to zero"));
        }
        Ok(Self(weights.into_iter().map(|w| w / sum).collect()))
    }

    /// All power on `port`.
    pub fn indicator(n: usize, port: usize) -> Result<Self> {
        if port >= n {
            return Err(Error::domain(format!("port {port} out of range for {n} modes")));
        }
        let mut p = vec![0.0; n];
        p[port] = 1.0;
        Ok(Self(p))
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("power distribution is empty"));
        }
        Ok(Self(vec![1.0 / n as f64; n]))
    }

    /// Trusted constructor for values produced by unitary propagation.
    pub(crate) fn from_unitary_output(p: Vec<f64>) -> Self {
        Self(p)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    /// Reorders ports so that entry `i` of the result is entry `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.0.len() {
            return Err(Error::contract("permutation length mismatch"));
        }
        Ok(Self(perm.iter().map(|&i| self.0[i]).collect()))
    }
}

impl TryFrom<Vec<f64>> for PowerDistribution {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<PowerDistribution> for Vec<f64> {
    fn from(p: PowerDistribution) -> Self {
        p.0
    }
}
