use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::StreamRng;

/// Number of fake trajectories wanted at each length (`m_{L=i}`).
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LengthDistribution {
    counts: BTreeMap<usize, usize>,
}

impl LengthDistribution {
    pub fn new(counts: BTreeMap<usize, usize>) -> Result<Self> {
        if counts.contains_key(&0) {
            return Err(Error::Argument(
                "trajectory length 0 in distribution".into(),
            ));
        }
        Ok(LengthDistribution { counts })
    }

    pub fn from_pairs(pairs: &[(usize, usize)]) -> Result<Self> {
        Self::new(pairs.iter().copied().collect())
    }

    /// Total `m`.
    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }

    pub fn count(&self, len: usize) -> usize {
        self.counts.get(&len).copied().unwrap_or(0)
    }

    /// Longest length with a positive count.
    pub fn max_len(&self) -> Option<usize> {
        self.counts
            .iter()
            .rev()
            .find(|(_, &c)| c > 0)
            .map(|(&l, _)| l)
    }

    pub fn min_len(&self) -> Option<usize> {
        self.counts.iter().find(|(_, &c)| c > 0).map(|(&l, _)| l)
    }

    /// Largest count among lengths strictly greater than `len`.
    pub fn max_after(&self, len: usize) -> usize {
        self.counts
            .range(len + 1..)
            .map(|(_, &c)| c)
            .max()
            .unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.counts.iter().map(|(&l, &c)| (l, c))
    }
}

/// Mean and spread of the sampled length distribution, as divisors:
/// `mean = (L_min + L_max) / mean_divisor`, `sd = (L_max - L_min) / std_divisor`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LengthShape {
    pub mean_divisor: f64,
    pub std_divisor: f64,
}

impl Default for LengthShape {
    fn default() -> Self {
        LengthShape {
            mean_divisor: 2.0,
            std_divisor: 5.0,
        }
    }
}

/// Draws `m` lengths from a rounded, clamped normal and tallies them.
pub fn sample_length_distribution(
    m: usize,
    l_min: usize,
    l_max: usize,
    seed: u64,
) -> Result<LengthDistribution> {
    sample_length_distribution_with(m, l_min, l_max, LengthShape::default(), seed)
}

pub fn sample_length_distribution_with(
    m: usize,
    l_min: usize,
    l_max: usize,
    shape: LengthShape,
    seed: u64,
) -> Result<LengthDistribution> {
    if l_min == 0 || l_min > l_max {
        return Err(Error::Argument(format!(
            "length bounds must satisfy 1 <= L_min <= L_max, got [{l_min}, {l_max}]"
        )));
    }
    if !(shape.mean_divisor > 0.0 && shape.std_divisor > 0.0) {
        return Err(Error::Argument(
            "length shape divisors must be positive".into(),
        ));
    }
    let mut counts = BTreeMap::new();
    if m == 0 {
        return Ok(LengthDistribution { counts });
    }
    let mean = (l_min + l_max) as f64 / shape.mean_divisor;
    let sd = (l_max - l_min) as f64 / shape.std_divisor;
    let normal = Normal::new(mean, sd).map_err(|e| Error::Argument(e.to_string()))?;
    let mut rng = StreamRng::seed_from_u64(seed);
    for len in l_min..=l_max {
        counts.insert(len, 0);
    }
    for _ in 0..m {
        let x = normal.sample(&mut rng).round();
        let len = x.clamp(l_min as f64, l_max as f64) as usize;
        *counts.get_mut(&len).expect("clamped into range") += 1;
    }
    Ok(LengthDistribution { counts })
}
