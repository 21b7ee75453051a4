use rand::{Rng, RngCore};

use crate::error::{Error, Result};

/// Candidates for the exponential mechanism. Utilities are assumed to have
/// sensitivity 1, so selection weights are `exp(eps * u / 2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmCandidateSet {
    utilities: Vec<f64>,
    epsilon: f64,
}

impl EmCandidateSet {
    pub fn new(utilities: Vec<f64>, epsilon: f64) -> Result<Self> {
        if utilities.is_empty() {
            return Err(Error::Argument(
                "exponential mechanism needs a candidate".into(),
            ));
        }
        if utilities.iter().any(|u| !u.is_finite()) {
            return Err(Error::Argument("utilities must be finite".into()));
        }
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::Argument(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        Ok(EmCandidateSet { utilities, epsilon })
    }

    pub fn len(&self) -> usize {
        self.utilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.utilities.is_empty()
    }

    pub fn utilities(&self) -> &[f64] {
        &self.utilities
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Unnormalized weights after shifting by the max utility, so the
    /// largest weight is exactly 1.
    pub fn weights(&self) -> Vec<f64> {
        em_weights(&self.utilities, self.epsilon)
    }

    pub fn probabilities(&self) -> Vec<f64> {
        let w = self.weights();
        let total: f64 = w.iter().sum();
        w.into_iter().map(|x| x / total).collect()
    }
}

pub(crate) fn em_weights(utilities: &[f64], epsilon: f64) -> Vec<f64> {
    let top = utilities.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    utilities
        .iter()
        .map(|u| (epsilon * (u - top) / 2.0).exp())
        .collect()
}

/// Index drawn from a weight vector with at least one positive entry.
pub(crate) fn sample_weighted<R: RngCore + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut x = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if x < w {
            return i;
        }
        x -= w;
    }
    // Rounding can leave x just past the last bucket.
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// Returns the index of the selected candidate.
pub fn em_sample<R: RngCore + ?Sized>(candidates: &EmCandidateSet, rng: &mut R) -> usize {
    if candidates.len() == 1 {
        return 0;
    }
    sample_weighted(&candidates.weights(), rng)
}
