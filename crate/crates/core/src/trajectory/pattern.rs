use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::grid::Cell;
use crate::error::{Error, Result};

/// An ordered sequence of grid cells.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Trajectory(Vec<Cell>);

impl Trajectory {
    pub fn new(cells: Vec<Cell>) -> Self {
        Trajectory(cells)
    }

    pub fn from_ids<I: IntoIterator<Item = u32>>(ids: I) -> Self {
        Trajectory(ids.into_iter().map(Cell).collect())
    }

    pub fn cells(&self) -> &[Cell] {
        &self.0
    }

    pub fn into_cells(self) -> Vec<Cell> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn last(&self) -> Option<Cell> {
        self.0.last().copied()
    }

    /// A copy with `cell` appended.
    pub fn extended(&self, cell: Cell) -> Self {
        let mut cells = Vec::with_capacity(self.0.len() + 1);
        cells.extend_from_slice(&self.0);
        cells.push(cell);
        Trajectory(cells)
    }

    pub fn ends_with(&self, suffix: &[Cell]) -> bool {
        self.0.ends_with(suffix)
    }

    pub fn ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.0.iter().map(|c| c.0)
    }
}

impl From<Vec<Cell>> for Trajectory {
    fn from(cells: Vec<Cell>) -> Self {
        Trajectory(cells)
    }
}

impl std::fmt::Display for Trajectory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Number of contiguous windows of `traj` equal to `pattern`.
///
/// Zero when the pattern is longer than the trajectory. An empty pattern
/// never matches.
pub fn count_pattern(pattern: &[Cell], traj: &[Cell]) -> usize {
    if pattern.is_empty() || pattern.len() > traj.len() {
        return 0;
    }
    traj.windows(pattern.len())
        .filter(|w| *w == pattern)
        .count()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetPattern {
    pub pattern: Trajectory,
    pub score: f64,
}

/// The attacker's target patterns with their importance scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetPatternSet {
    patterns: Vec<TargetPattern>,
    k_min: usize,
    k_max: usize,
}

impl TargetPatternSet {
    /// Validates and builds a pattern set. Patterns must be non-empty,
    /// distinct, and carry finite non-negative scores.
    pub fn new(patterns: Vec<TargetPattern>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(patterns.len());
        for tp in &patterns {
            if tp.pattern.is_empty() {
                return Err(Error::Config("empty target pattern".into()));
            }
            if !tp.score.is_finite() || tp.score < 0.0 {
                return Err(Error::Config(format!(
                    "pattern {} has invalid score {}",
                    tp.pattern, tp.score
                )));
            }
            if !seen.insert(&tp.pattern) {
                return Err(Error::Config(format!(
                    "duplicate target pattern {}",
                    tp.pattern
                )));
            }
        }
        let k_min = patterns.iter().map(|t| t.pattern.len()).min().unwrap_or(0);
        let k_max = patterns.iter().map(|t| t.pattern.len()).max().unwrap_or(0);
        Ok(TargetPatternSet {
            patterns,
            k_min,
            k_max,
        })
    }

    /// Length-based scoring: every pattern scores its own length.
    pub fn with_length_scores(patterns: Vec<Trajectory>) -> Result<Self> {
        Self::new(
            patterns
                .into_iter()
                .map(|p| {
                    let score = p.len() as f64;
                    TargetPattern { pattern: p, score }
                })
                .collect(),
        )
    }

    pub fn empty() -> Self {
        TargetPatternSet {
            patterns: Vec::new(),
            k_min: 0,
            k_max: 0,
        }
    }

    pub fn patterns(&self) -> &[TargetPattern] {
        &self.patterns
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn k_min(&self) -> usize {
        self.k_min
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    /// True when scores never decrease as pattern length grows.
    pub fn is_length_monotone(&self) -> bool {
        self.patterns.iter().all(|a| {
            self.patterns
                .iter()
                .all(|b| a.pattern.len() >= b.pattern.len() || a.score <= b.score)
        })
    }

    /// Multiply every score by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.patterns
                .iter()
                .map(|t| TargetPattern {
                    pattern: t.pattern.clone(),
                    score: t.score * factor,
                })
                .collect(),
        )
    }

    /// Union with a disjoint pattern set.
    pub fn union(&self, other: &TargetPatternSet) -> Result<Self> {
        let mut all = self.patterns.clone();
        all.extend(other.patterns.iter().cloned());
        Self::new(all)
    }
}

/// `sum over tp of score(tp) * count_pattern(tp, traj)`.
pub fn traj_score(traj: &[Cell], tp: &TargetPatternSet) -> f64 {
    tp.patterns
        .iter()
        .map(|t| {
            let n = count_pattern(t.pattern.cells(), traj);
            if n == 0 {
                0.0
            } else {
                t.score * n as f64
            }
        })
        .sum()
}

/// Patterns bucketed by their final cell, for incremental scoring of
/// trajectories grown one cell at a time.
#[derive(Debug, Clone)]
pub struct PatternIndex {
    by_last: HashMap<Cell, Vec<(Vec<Cell>, f64)>>,
}

impl PatternIndex {
    pub fn new(tp: &TargetPatternSet) -> Self {
        let mut by_last: HashMap<Cell, Vec<(Vec<Cell>, f64)>> = HashMap::new();
        for t in tp.patterns() {
            let last = t.pattern.last().expect("validated non-empty");
            by_last
                .entry(last)
                .or_default()
                .push((t.pattern.cells().to_vec(), t.score));
        }
        PatternIndex { by_last }
    }

    /// Score contributed by pattern occurrences ending at the final cell of
    /// `traj`. Summed over every prefix of a trajectory this equals
    /// [`traj_score`].
    pub fn gain_at_end(&self, traj: &[Cell]) -> f64 {
        let Some(last) = traj.last() else {
            return 0.0;
        };
        match self.by_last.get(last) {
            None => 0.0,
            Some(list) => list
                .iter()
                .filter(|(p, _)| traj.ends_with(p))
                .map(|(_, s)| *s)
                .sum(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(ids: &[u32]) -> Trajectory {
        Trajectory::from_ids(ids.iter().copied())
    }

    // a=0, b=1, c=2, d=3
    fn toy_tp() -> TargetPatternSet {
        TargetPatternSet::new(vec![
            TargetPattern {
                pattern: t(&[0, 1]),
                score: 1.0,
            },
            TargetPattern {
                pattern: t(&[0, 1, 2]),
                score: 2.0,
            },
            TargetPattern {
                pattern: t(&[1, 3]),
                score: 1.0,
            },
        ])
        .unwrap()
    }

    #[test]
    fn count_pattern_examples() {
        assert_eq!(count_pattern(t(&[0, 1]).cells(), t(&[0, 1, 2]).cells()), 1);
        assert_eq!(count_pattern(t(&[1]).cells(), t(&[1, 1]).cells()), 2);
        assert_eq!(count_pattern(t(&[0, 1, 2]).cells(), t(&[0, 1]).cells()), 0);
    }

    #[test]
    fn count_pattern_overlapping() {
        assert_eq!(count_pattern(t(&[5, 5]).cells(), t(&[5, 5, 5]).cells()), 2);
    }

    #[test]
    fn traj_score_toy_world() {
        let tp = toy_tp();
        assert_eq!(traj_score(t(&[0, 1]).cells(), &tp), 1.0);
        assert_eq!(traj_score(t(&[0, 0]).cells(), &tp), 0.0);
        assert_eq!(traj_score(t(&[0, 1, 2]).cells(), &tp), 3.0);
    }

    #[test]
    fn incremental_gain_sums_to_score() {
        let tp = toy_tp();
        let idx = PatternIndex::new(&tp);
        let traj = t(&[0, 1, 2, 1, 3, 0, 1, 2]);
        let total: f64 = (1..=traj.len())
            .map(|n| idx.gain_at_end(&traj.cells()[..n]))
            .sum();
        assert_eq!(total, traj_score(traj.cells(), &tp));
    }

    #[test]
    fn rejects_duplicates_and_bad_scores() {
        let dup = vec![
            TargetPattern {
                pattern: t(&[1]),
                score: 1.0,
            },
            TargetPattern {
                pattern: t(&[1]),
                score: 2.0,
            },
        ];
        assert!(TargetPatternSet::new(dup).is_err());
        let neg = vec![TargetPattern {
            pattern: t(&[1]),
            score: -1.0,
        }];
        assert!(TargetPatternSet::new(neg).is_err());
        let empty = vec![TargetPattern {
            pattern: t(&[]),
            score: 1.0,
        }];
        assert!(TargetPatternSet::new(empty).is_err());
    }

    #[test]
    fn length_monotone_policy() {
        assert!(toy_tp().is_length_monotone());
        let bad = TargetPatternSet::new(vec![
            TargetPattern {
                pattern: t(&[1]),
                score: 3.0,
            },
            TargetPattern {
                pattern: t(&[1, 2]),
                score: 1.0,
            },
        ])
        .unwrap();
        assert!(!bad.is_length_monotone());
    }
}
