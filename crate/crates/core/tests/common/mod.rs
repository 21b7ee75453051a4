#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trap_core::generator::LengthDistribution;
use trap_core::trajectory::{
    Cell, GridSpec, ReachMode, ReachabilityGraph, TargetPattern, TargetPatternSet, Trajectory,
};

pub const A: u32 = 0;
pub const B: u32 = 1;
pub const C: u32 = 2;
pub const D: u32 = 3;

pub fn t(ids: &[u32]) -> Trajectory {
    Trajectory::from_ids(ids.iter().copied())
}

/// Four points a..d: a->{a,b}, b->{a,b,c,d}, c->{b,c,d}, d->{b,c,d}.
pub fn toy_rps() -> ReachabilityGraph {
    let g = GridSpec::square(2, 2).unwrap();
    let c = Cell;
    let edges = vec![
        (c(A), vec![c(A), c(B)]),
        (c(B), vec![c(A), c(B), c(C), c(D)]),
        (c(C), vec![c(B), c(C), c(D)]),
        (c(D), vec![c(B), c(C), c(D)]),
    ];
    ReachabilityGraph::build(&g, &ReachMode::Explicit { edges }, true).unwrap()
}

pub fn toy_tp() -> TargetPatternSet {
    TargetPatternSet::new(vec![
        TargetPattern {
            pattern: t(&[A, B]),
            score: 1.0,
        },
        TargetPattern {
            pattern: t(&[A, B, C]),
            score: 2.0,
        },
        TargetPattern {
            pattern: t(&[B, D]),
            score: 1.0,
        },
    ])
    .unwrap()
}

pub fn toy_dist() -> LengthDistribution {
    LengthDistribution::from_pairs(&[(1, 3), (2, 5), (3, 4)]).unwrap()
}

/// Random instance: |P| in 2..=6, random symmetric-or-not reachability with
/// at least one out-edge per cell, patterns drawn as random walks.
pub fn random_instance(
    seed: u64,
) -> (
    ReachabilityGraph,
    TargetPatternSet,
    LengthDistribution,
    usize,
) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=6usize);
    let lists: Vec<Vec<Cell>> = (0..n)
        .map(|a| {
            let mut outs: Vec<Cell> = (0..n)
                .filter(|_| rng.random_bool(0.5))
                .map(|b| Cell(b as u32))
                .collect();
            if outs.is_empty() {
                outs.push(Cell(((a + 1) % n) as u32));
            }
            outs
        })
        .collect();
    let rps = ReachabilityGraph::from_lists(lists).unwrap();
    let mut patterns: Vec<Trajectory> = Vec::new();
    for _ in 0..rng.random_range(1..=5) {
        let k = rng.random_range(1..=3usize);
        let mut cells = vec![Cell(rng.random_range(0..n as u32))];
        while cells.len() < k {
            let outs = rps.next(*cells.last().unwrap());
            cells.push(outs[rng.random_range(0..outs.len())]);
        }
        let tr = Trajectory::new(cells);
        if !patterns.contains(&tr) {
            patterns.push(tr);
        }
    }
    let tp = TargetPatternSet::new(
        patterns
            .into_iter()
            .map(|p| {
                let score = p.len() as f64;
                TargetPattern { pattern: p, score }
            })
            .collect(),
    )
    .unwrap();
    let l_max = rng.random_range(1..=4usize);
    let max_rep = rng.random_range(1..=2usize);
    let m = rng.random_range(1..=12usize);
    let mut counts = std::collections::BTreeMap::new();
    for _ in 0..m {
        *counts.entry(rng.random_range(1..=l_max)).or_insert(0) += 1;
    }
    (rps, tp, LengthDistribution::new(counts).unwrap(), max_rep)
}
