use std::collections::HashMap;

use log::warn;
use serde::{Deserialize, Serialize};

use super::length::LengthDistribution;
use super::prefix::PrefixSet;
use super::prune::{delete_hopeless, Candidate, PrefixIndex};
use super::select::{pick_high, Scored, TieBreak};
use crate::error::{Error, Result};
use crate::trajectory::{
    traj_score, Cell, PatternIndex, ReachabilityGraph, TargetPatternSet, Trajectory,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnderfillPolicy {
    /// Abort with [`Error::UnderFill`].
    #[default]
    Error,
    /// Log a warning and return fewer trajectories at that length.
    Warn,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrapConfig {
    pub max_rep: usize,
    #[serde(default)]
    pub tie_break: TieBreak,
    #[serde(default)]
    pub underfill: UnderfillPolicy,
}

impl TrapConfig {
    pub fn new(max_rep: usize) -> Self {
        TrapConfig {
            max_rep,
            tie_break: TieBreak::Lexicographic,
            underfill: UnderfillPolicy::Error,
        }
    }
}

/// Per-length bookkeeping of one generation round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundStats {
    pub length: usize,
    /// Candidates instantiated at this length.
    pub candidates: usize,
    /// Candidates surviving pruning (carried into the next length).
    pub kept: usize,
}

/// The generated fake set `T*`.
#[derive(Debug, Clone, PartialEq)]
pub struct FakeTrajectorySet {
    pub trajectories: Vec<Trajectory>,
    pub rounds: Vec<RoundStats>,
    /// Lengths that came up short under [`UnderfillPolicy::Warn`].
    pub underfilled: Vec<usize>,
}

impl FakeTrajectorySet {
    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn from_trajectories(trajectories: Vec<Trajectory>) -> Self {
        FakeTrajectorySet {
            trajectories,
            rounds: Vec::new(),
            underfilled: Vec::new(),
        }
    }

    pub fn total_score(&self, tp: &TargetPatternSet) -> f64 {
        self.trajectories
            .iter()
            .map(|t| traj_score(t.cells(), tp))
            .sum()
    }

    /// Number of fakes of each length.
    pub fn length_tally(&self) -> HashMap<usize, usize> {
        let mut out = HashMap::new();
        for t in &self.trajectories {
            *out.entry(t.len()).or_insert(0) += 1;
        }
        out
    }

    /// Largest multiplicity of any single trajectory.
    pub fn max_multiplicity(&self) -> usize {
        let mut counts: HashMap<&Trajectory, usize> = HashMap::new();
        for t in &self.trajectories {
            *counts.entry(t).or_insert(0) += 1;
        }
        counts.values().copied().max().unwrap_or(0)
    }

    /// Checks per-length counts, the repetition cap, and reachability.
    pub fn check_constraints(
        &self,
        rps: &ReachabilityGraph,
        dist: &LengthDistribution,
        max_rep: usize,
    ) -> Result<()> {
        let tally = self.length_tally();
        for (len, want) in dist.iter() {
            let got = tally.get(&len).copied().unwrap_or(0);
            if got != want {
                return Err(Error::Data(format!(
                    "length {len}: {got} fakes, distribution asks for {want}"
                )));
            }
        }
        if let Some((len, _)) = tally.iter().find(|(l, _)| dist.count(**l) == 0) {
            return Err(Error::Data(format!("unrequested length {len} in fake set")));
        }
        if self.max_multiplicity() > max_rep {
            return Err(Error::Data(format!(
                "a trajectory repeats {} times, cap is {max_rep}",
                self.max_multiplicity()
            )));
        }
        if let Some(bad) = self.trajectories.iter().find(|t| !rps.is_valid(t.cells())) {
            return Err(Error::Data(format!("fake {bad} violates reachability")));
        }
        Ok(())
    }
}

/// Checks that target patterns fit the domain and its reachability.
pub fn validate_patterns(rps: &ReachabilityGraph, tp: &TargetPatternSet) -> Result<()> {
    for t in tp.patterns() {
        if let Some(c) = t.pattern.cells().iter().find(|c| !rps.contains(**c)) {
            return Err(Error::Domain {
                cell: c.0,
                domain: rps.domain_size(),
            });
        }
        if !rps.is_valid(t.pattern.cells()) {
            return Err(Error::Config(format!(
                "target pattern {} violates reachability",
                t.pattern
            )));
        }
    }
    Ok(())
}

/// Prefix-suffix generation of a fake trajectory set.
///
/// Starting from every single cell, each round extends the surviving
/// candidates by one reachable cell, scores and categorizes them, takes the
/// best `m_{L=i}` for the current length, then prunes candidates that cannot
/// reach a top-scoring extension set for any later length.
pub fn trap_generate(
    rps: &ReachabilityGraph,
    tp: &TargetPatternSet,
    dist: &LengthDistribution,
    cfg: &TrapConfig,
) -> Result<FakeTrajectorySet> {
    if cfg.max_rep == 0 {
        return Err(Error::Argument("max_rep must be positive".into()));
    }
    if tp.is_empty() {
        return Err(Error::Argument("target pattern set is empty".into()));
    }
    let Some(l_max) = dist.max_len() else {
        return Err(Error::Argument("length distribution is empty".into()));
    };
    validate_patterns(rps, tp)?;

    let pref = PrefixSet::build(tp);
    let scorer = PatternIndex::new(tp);
    let order = cfg.tie_break;

    let mut out = FakeTrajectorySet::from_trajectories(Vec::with_capacity(dist.total()));
    let mut frontier: Vec<Candidate> = Vec::new();

    for len in 1..=l_max {
        let cands: Vec<Candidate> = if len == 1 {
            (0..rps.domain_size() as u32)
                .map(|id| {
                    let traj = Trajectory::new(vec![Cell(id)]);
                    let score = scorer.gain_at_end(traj.cells());
                    let category = pref.category_of(traj.cells());
                    Candidate {
                        traj,
                        score,
                        category,
                    }
                })
                .collect()
        } else {
            extend(&frontier, rps, &scorer, &pref)
        };

        let want = dist.count(len);
        if want > 0 {
            let scored: Vec<Scored> = cands
                .iter()
                .map(|c| Scored {
                    traj: c.traj.clone(),
                    score: c.score,
                })
                .collect();
            let pick = pick_high(&scored, want, cfg.max_rep, order);
            if pick.underfilled {
                match cfg.underfill {
                    UnderfillPolicy::Error => {
                        return Err(Error::UnderFill {
                            length: len,
                            needed: want,
                            available: cands.len() * cfg.max_rep,
                        })
                    }
                    UnderfillPolicy::Warn => {
                        warn!(
                            "length {len}: only {} of {want} fakes available",
                            pick.picked.len()
                        );
                        out.underfilled.push(len);
                    }
                }
            }
            out.trajectories.extend(pick.picked);
        }

        if len == l_max {
            out.rounds.push(RoundStats {
                length: len,
                candidates: cands.len(),
                kept: 0,
            });
            break;
        }
        let m_max = dist.max_after(len);
        let index = PrefixIndex::build(&cands, &pref, order);
        let keep = delete_hopeless(&cands, &index, m_max, cfg.max_rep, rps, &pref);
        let n_cands = cands.len();
        frontier = cands
            .into_iter()
            .zip(keep)
            .filter_map(|(c, k)| k.then_some(c))
            .collect();
        out.rounds.push(RoundStats {
            length: len,
            candidates: n_cands,
            kept: frontier.len(),
        });
    }
    Ok(out)
}

fn extend(
    frontier: &[Candidate],
    rps: &ReachabilityGraph,
    scorer: &PatternIndex,
    pref: &PrefixSet,
) -> Vec<Candidate> {
    let mut next = Vec::with_capacity(frontier.len() * 8);
    for c in frontier {
        let last = c.traj.last().expect("non-empty candidate");
        for &cell in rps.next(last) {
            let traj = c.traj.extended(cell);
            let score = c.score + scorer.gain_at_end(traj.cells());
            let category = pref.category_of(traj.cells());
            next.push(Candidate {
                traj,
                score,
                category,
            });
        }
    }
    next
}
