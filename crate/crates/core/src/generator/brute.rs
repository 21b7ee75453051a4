use std::cmp::Ordering;

use super::length::LengthDistribution;
use super::trap::{validate_patterns, FakeTrajectorySet};
use crate::error::{Error, Result};
use crate::trajectory::{traj_score, Cell, ReachabilityGraph, TargetPatternSet, Trajectory};

/// Default per-length enumeration cap.
pub const DEFAULT_ENUMERATION_CAP: u128 = 5_000_000;

/// Exhaustive generation: enumerate every reachability-valid trajectory of
/// each requested length, sort by score, and fill greedily. Optimal per
/// length, exponential in the length.
pub fn brute_force_generate(
    rps: &ReachabilityGraph,
    tp: &TargetPatternSet,
    dist: &LengthDistribution,
    max_rep: usize,
    cap: u128,
) -> Result<FakeTrajectorySet> {
    if max_rep == 0 {
        return Err(Error::Argument("max_rep must be positive".into()));
    }
    validate_patterns(rps, tp)?;
    let Some(l_max) = dist.max_len() else {
        return Err(Error::Argument("length distribution is empty".into()));
    };
    let walk_counts = rps.walk_counts(l_max);
    let mut out = Vec::with_capacity(dist.total());
    for (len, want) in dist.iter() {
        if want == 0 {
            continue;
        }
        let count = walk_counts[len - 1];
        if count > cap {
            return Err(Error::Capacity {
                length: len,
                count,
                cap,
            });
        }
        let mut all: Vec<(Trajectory, f64)> = enumerate(rps, len)
            .into_iter()
            .map(|t| {
                let s = traj_score(t.cells(), tp);
                (t, s)
            })
            .collect();
        all.sort_by(|a, b| match b.1.total_cmp(&a.1) {
            Ordering::Equal => a.0.cmp(&b.0),
            o => o,
        });
        if all.len() * max_rep < want {
            return Err(Error::UnderFill {
                length: len,
                needed: want,
                available: all.len() * max_rep,
            });
        }
        // The top floor(want / max_rep) go in max_rep times each, the next one
        // takes the remainder.
        let full = want / max_rep;
        for (t, _) in all.iter().take(full) {
            for _ in 0..max_rep {
                out.push(t.clone());
            }
        }
        for _ in 0..(want - full * max_rep) {
            out.push(all[full].0.clone());
        }
    }
    Ok(FakeTrajectorySet::from_trajectories(out))
}

/// Every reachability-valid trajectory of exactly `len` cells.
pub fn enumerate(rps: &ReachabilityGraph, len: usize) -> Vec<Trajectory> {
    let mut out = Vec::new();
    let mut stack: Vec<Cell> = Vec::with_capacity(len);
    for start in 0..rps.domain_size() as u32 {
        stack.push(Cell(start));
        walk(rps, len, &mut stack, &mut out);
        stack.pop();
    }
    out
}

fn walk(rps: &ReachabilityGraph, len: usize, stack: &mut Vec<Cell>, out: &mut Vec<Trajectory>) {
    if stack.len() == len {
        out.push(Trajectory::new(stack.clone()));
        return;
    }
    let last = *stack.last().unwrap();
    for &next in rps.next(last) {
        stack.push(next);
        walk(rps, len, stack, out);
        stack.pop();
    }
}
