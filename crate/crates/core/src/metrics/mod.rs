//! Attack-effectiveness metrics: mean target score and mean percentile
//! rank of target patterns.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectory::{Cell, PatternIndex, TargetPatternSet, Trajectory};

/// Mean [`crate::trajectory::traj_score`] over the dataset.
pub fn avg_score<'a>(
    dataset: impl IntoIterator<Item = &'a Trajectory>,
    tp: &TargetPatternSet,
) -> Result<f64> {
    let index = PatternIndex::new(tp);
    let mut total = 0.0;
    let mut n = 0usize;
    for t in dataset {
        let cells = t.cells();
        total += (1..=cells.len())
            .map(|i| index.gain_at_end(&cells[..i]))
            .sum::<f64>();
        n += 1;
    }
    if n == 0 {
        return Err(Error::Argument("avg_score of an empty dataset".into()));
    }
    Ok(total / n as f64)
}

/// How patterns tied with the target count toward its rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankTies {
    /// Rank counts patterns with `count <= count(tp)`.
    #[default]
    Inclusive,
    /// Rank counts patterns with `count < count(tp)`.
    Strict,
}

/// Occurrence counts of every length-`k` window in a dataset, sorted
/// ascending for rank queries.
#[derive(Debug, Clone)]
pub struct PatternCounts<'a> {
    counts: HashMap<&'a [Cell], u64>,
    sorted: Vec<u64>,
}

impl<'a> PatternCounts<'a> {
    pub fn build(dataset: impl IntoIterator<Item = &'a Trajectory>, k: usize) -> Self {
        let mut counts: HashMap<&'a [Cell], u64> = HashMap::new();
        if k > 0 {
            for t in dataset {
                for w in t.cells().windows(k) {
                    *counts.entry(w).or_default() += 1;
                }
            }
        }
        let mut sorted: Vec<u64> = counts.values().copied().collect();
        sorted.sort_unstable();
        PatternCounts { counts, sorted }
    }

    pub fn count(&self, pattern: &[Cell]) -> u64 {
        self.counts.get(pattern).copied().unwrap_or(0)
    }

    pub fn distinct(&self) -> usize {
        self.sorted.len()
    }

    /// Percentile rank in `[0, 100]`; the target joins the universe with
    /// count zero when it was never observed.
    pub fn percentile_rank(&self, pattern: &[Cell], ties: RankTies) -> f64 {
        let c = self.count(pattern);
        let mut universe = self.sorted.len();
        let mut below = match ties {
            RankTies::Inclusive => self.sorted.partition_point(|&x| x <= c),
            RankTies::Strict => self.sorted.partition_point(|&x| x < c),
        };
        if c == 0 {
            universe += 1;
            if ties == RankTies::Inclusive {
                below += 1;
            }
        }
        100.0 * below as f64 / universe as f64
    }
}

/// Percentile rank of `pattern` among same-length patterns in the dataset.
pub fn get_pr<'a>(
    pattern: &[Cell],
    dataset: impl IntoIterator<Item = &'a Trajectory>,
    ties: RankTies,
) -> Result<f64> {
    if pattern.is_empty() {
        return Err(Error::Argument("empty pattern".into()));
    }
    Ok(PatternCounts::build(dataset, pattern.len()).percentile_rank(pattern, ties))
}

/// Mean percentile rank over every target pattern.
pub fn avg_pr(dataset: &[Trajectory], tp: &TargetPatternSet, ties: RankTies) -> Result<f64> {
    if tp.is_empty() {
        return Err(Error::Argument("avg_pr needs target patterns".into()));
    }
    let mut by_len: HashMap<usize, PatternCounts<'_>> = HashMap::new();
    let mut total = 0.0;
    for t in tp.patterns() {
        let k = t.pattern.len();
        let pc = by_len
            .entry(k)
            .or_insert_with(|| PatternCounts::build(dataset, k));
        total += pc.percentile_rank(t.pattern.cells(), ties);
    }
    Ok(total / tp.len() as f64)
}

/// AvgScore and AvgPR of one dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub avg_score: f64,
    pub avg_pr: f64,
}

impl Metrics {
    pub fn evaluate(dataset: &[Trajectory], tp: &TargetPatternSet, ties: RankTies) -> Result<Self> {
        Ok(Metrics {
            avg_score: avg_score(dataset, tp)?,
            avg_pr: avg_pr(dataset, tp, ties)?,
        })
    }
}

/// Metrics of an attacked dataset with gains over a reference run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub avg_score: f64,
    pub avg_pr: f64,
    pub score_gain: f64,
    pub pr_gain: f64,
    pub config_digest: String,
    pub seed: u64,
}

impl MetricReport {
    pub fn from_runs(before: &Metrics, after: &Metrics, config_digest: &str, seed: u64) -> Self {
        MetricReport {
            avg_score: after.avg_score,
            avg_pr: after.avg_pr,
            score_gain: after.avg_score - before.avg_score,
            pr_gain: after.avg_pr - before.avg_pr,
            config_digest: config_digest.to_string(),
            seed,
        }
    }
}
