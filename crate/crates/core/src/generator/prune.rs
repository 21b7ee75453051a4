use super::prefix::PrefixSet;
use super::select::TieBreak;
use crate::trajectory::{ReachabilityGraph, Trajectory};

/// A length-i candidate with its exact score and prefix category.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub traj: Trajectory,
    pub score: f64,
    /// Index into the [`PrefixSet`].
    pub category: usize,
}

/// Candidates bucketed by prefix category, each bucket score-descending.
#[derive(Debug, Clone)]
pub struct PrefixIndex {
    buckets: Vec<Vec<usize>>,
}

impl PrefixIndex {
    pub fn build(cands: &[Candidate], pref: &PrefixSet, order: TieBreak) -> Self {
        let mut buckets = vec![Vec::new(); pref.len()];
        for (i, c) in cands.iter().enumerate() {
            buckets[c.category].push(i);
        }
        for b in &mut buckets {
            b.sort_by(|&i, &j| {
                order.compare(
                    (&cands[i].traj, cands[i].score),
                    (&cands[j].traj, cands[j].score),
                )
            });
        }
        PrefixIndex { buckets }
    }

    pub fn bucket(&self, category: usize) -> &[usize] {
        &self.buckets[category]
    }
}

/// Marks candidates that can still contribute to a top-scoring extension
/// set. Returns a keep mask aligned with `cands`.
///
/// Categories are visited longest-first. A category with ancestors keeps a
/// trajectory outright when it outscores every ancestor bucket's best;
/// otherwise it is kept only while the extension capacity
/// `sum |rps[last]| * max_rep` of already-kept ancestor trajectories scoring
/// at least as high stays within `m_max`. A category without ancestors keeps
/// trajectories in score order while its own accumulated capacity is within
/// `m_max`. Either way a category keeps at most `ceil(m_max / max_rep)`
/// trajectories, its best-scoring ones.
pub fn delete_hopeless(
    cands: &[Candidate],
    index: &PrefixIndex,
    m_max: usize,
    max_rep: usize,
    rps: &ReachabilityGraph,
    pref: &PrefixSet,
) -> Vec<bool> {
    let cap = m_max.div_ceil(max_rep.max(1)).max(1);
    let m_max = m_max as u64;
    let capacity = |i: usize| -> u64 {
        let last = cands[i].traj.last().expect("candidates are non-empty");
        rps.out_degree(last) as u64 * max_rep as u64
    };
    let mut keep = vec![false; cands.len()];
    let mut selected: Vec<Vec<usize>> = vec![Vec::new(); pref.len()];

    for u in 0..pref.len() {
        let bucket = index.bucket(u);
        if bucket.is_empty() {
            continue;
        }
        let ancestors = pref.ancestors(u);
        if ancestors.is_empty() {
            let mut acc = 0u64;
            for &i in bucket {
                if acc <= m_max && selected[u].len() < cap {
                    keep[i] = true;
                    selected[u].push(i);
                    acc += capacity(i);
                }
            }
            continue;
        }

        let top = ancestors
            .iter()
            .filter_map(|&v| index.bucket(v).first())
            .map(|&i| cands[i].score)
            .max_by(|a, b| a.total_cmp(b));

        // Kept ancestor trajectories, score-descending, with running capacity.
        let mut pool: Vec<(f64, u64)> = ancestors
            .iter()
            .flat_map(|&v| selected[v].iter())
            .map(|&i| (cands[i].score, capacity(i)))
            .collect();
        pool.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut running = Vec::with_capacity(pool.len() + 1);
        running.push(0u64);
        for (_, cap) in &pool {
            running.push(running.last().unwrap() + cap);
        }

        for &i in bucket {
            let s = cands[i].score;
            let outscores = top.is_none_or(|t| s > t);
            let kept = outscores || {
                let n_ge = pool.partition_point(|(ps, _)| *ps >= s);
                running[n_ge] <= m_max
            };
            if kept && selected[u].len() < cap {
                keep[i] = true;
                selected[u].push(i);
            }
        }
    }
    keep
}
