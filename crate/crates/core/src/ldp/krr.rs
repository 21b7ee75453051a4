use rand::{Rng, RngCore};

use crate::error::{Error, Result};

/// Probability that k-RR reports the true item.
pub fn krr_keep_probability(domain: usize, epsilon: f64) -> f64 {
    let e = epsilon.exp();
    if e.is_infinite() {
        return 1.0;
    }
    e / (e + domain as f64 - 1.0)
}

/// Exact output distribution entry `Pr[out | item]`.
pub fn krr_output_probability(item: usize, out: usize, domain: usize, epsilon: f64) -> f64 {
    let keep = krr_keep_probability(domain, epsilon);
    if item == out {
        keep
    } else {
        (1.0 - keep) / (domain as f64 - 1.0)
    }
}

/// k-ary randomized response over `[0, domain)`.
pub fn krr_perturb<R: RngCore + ?Sized>(
    item: usize,
    domain: usize,
    epsilon: f64,
    rng: &mut R,
) -> Result<usize> {
    if domain < 2 {
        return Err(Error::Argument(format!(
            "k-RR needs at least 2 items, got {domain}"
        )));
    }
    if item >= domain {
        return Err(Error::Argument(format!(
            "item {item} outside domain {domain}"
        )));
    }
    if !(epsilon > 0.0) {
        return Err(Error::Argument(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if rng.random_bool(krr_keep_probability(domain, epsilon)) {
        return Ok(item);
    }
    let other = rng.random_range(0..domain - 1);
    Ok(if other >= item { other + 1 } else { other })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn keep_probability_ln3() {
        assert!((krr_keep_probability(2, 3f64.ln()) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn huge_epsilon_is_identity() {
        let mut rng = stream(3, "krr", 0);
        for i in 0..5 {
            assert_eq!(krr_perturb(i, 5, 1000.0, &mut rng).unwrap(), i);
        }
    }

    #[test]
    fn empirical_keep_rate() {
        let mut rng = stream(4, "krr", 0);
        let eps = 1.0;
        let p = krr_keep_probability(6, eps);
        let kept = (0..10_000)
            .filter(|_| krr_perturb(2, 6, eps, &mut rng).unwrap() == 2)
            .count();
        assert!((kept as f64 / 10_000.0 - p).abs() < 0.02);
    }

    #[test]
    fn rejects_tiny_domain() {
        let mut rng = stream(5, "krr", 0);
        assert!(krr_perturb(0, 1, 1.0, &mut rng).is_err());
        assert!(krr_perturb(3, 3, 1.0, &mut rng).is_err());
    }
}
