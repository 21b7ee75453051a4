use log::warn;

use crate::error::{Error, Result};

/// Shifts a noisy estimate so its minimum is zero, then rescales to sum 1.
/// A flat vector has nothing to shift and comes back uniform.
pub fn normalize_distribution(estimates: &[f64]) -> Result<Vec<f64>> {
    if estimates.is_empty() {
        return Err(Error::Argument("cannot normalize an empty vector".into()));
    }
    if estimates.iter().any(|x| !x.is_finite()) {
        return Err(Error::Argument("estimates must be finite".into()));
    }
    let min = estimates.iter().copied().fold(f64::INFINITY, f64::min);
    let shifted: Vec<f64> = estimates.iter().map(|x| x - min).collect();
    let total: f64 = shifted.iter().sum();
    if total <= 0.0 {
        warn!("normalization of a flat vector, returning uniform");
        return Ok(uniform(estimates.len()));
    }
    Ok(shifted.into_iter().map(|x| x / total).collect())
}

/// Clamps negatives to zero and rescales; used when the normalization
/// defense is off. `None` when nothing positive remains.
pub fn clamp_distribution(estimates: &[f64]) -> Option<Vec<f64>> {
    let clamped: Vec<f64> = estimates.iter().map(|x| x.max(0.0)).collect();
    let total: f64 = clamped.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return None;
    }
    Some(clamped.into_iter().map(|x| x / total).collect())
}

pub(crate) fn uniform(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shifts_negative_minimum() {
        let out = normalize_distribution(&[-0.1, 0.5, 0.6]).unwrap();
        let want = [0.0, 0.6 / 1.3, 0.7 / 1.3];
        for (a, b) in out.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((out[1] - 0.4615).abs() < 5e-5);
        assert!((out[2] - 0.5385).abs() < 5e-5);
    }

    #[test]
    fn valid_distribution_unchanged() {
        let out = normalize_distribution(&[0.0, 0.3, 0.7]).unwrap();
        assert!((out[1] - 0.3).abs() < 1e-12 && (out[2] - 0.7).abs() < 1e-12);
    }

    #[test]
    fn flat_is_uniform() {
        let out = normalize_distribution(&[2.5; 3]).unwrap();
        assert!(out.iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn clamp_drops_negatives() {
        assert_eq!(
            clamp_distribution(&[-1.0, 1.0, 3.0]).unwrap(),
            vec![0.0, 0.25, 0.75]
        );
        assert!(clamp_distribution(&[-1.0, 0.0]).is_none());
    }
}
