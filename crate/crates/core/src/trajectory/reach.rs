use serde::{Deserialize, Serialize};

use super::grid::{Cell, GridSpec};
use crate::error::{Error, Result};

/// How reachable next cells are decided.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReachMode {
    /// The up-to-eight cells touching a cell.
    Neighbors8,
    /// Cells whose center distance divided by `speed_mps` is at most
    /// `interval_s`.
    SpeedLimit { speed_mps: f64, interval_s: f64 },
    /// Hand-written adjacency; cells without an entry reach nothing.
    Explicit { edges: Vec<(Cell, Vec<Cell>)> },
}

/// Per-cell ordered set of reachable next cells (`rps`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReachabilityGraph {
    rps: Vec<Vec<Cell>>,
}

impl ReachabilityGraph {
    /// Builds the graph. Mode predicates only relate distinct cells; a cell
    /// reaches itself only when `self_loops` is set (or an explicit list
    /// names it).
    pub fn build(spec: &GridSpec, mode: &ReachMode, self_loops: bool) -> Result<Self> {
        let n = spec.domain_size();
        let mut rps: Vec<Vec<Cell>> = vec![Vec::new(); n];
        match mode {
            ReachMode::Neighbors8 => {
                let (rows, cols) = (spec.rows() as i64, spec.cols() as i64);
                for (id, out) in rps.iter_mut().enumerate() {
                    let (r, c) = spec.row_col(Cell(id as u32));
                    for dr in -1i64..=1 {
                        for dc in -1i64..=1 {
                            if dr == 0 && dc == 0 {
                                continue;
                            }
                            let (nr, nc) = (r as i64 + dr, c as i64 + dc);
                            if nr >= 0 && nr < rows && nc >= 0 && nc < cols {
                                out.push(spec.cell_at(nr as u32, nc as u32));
                            }
                        }
                    }
                }
            }
            ReachMode::SpeedLimit {
                speed_mps,
                interval_s,
            } => {
                if !(*speed_mps > 0.0 && *interval_s > 0.0) {
                    return Err(Error::Argument(
                        "speed and interval must both be positive".into(),
                    ));
                }
                let max_m = speed_mps * interval_s;
                for (a, out) in rps.iter_mut().enumerate() {
                    for b in 0..n {
                        if a != b && spec.center_distance_m(Cell(a as u32), Cell(b as u32)) <= max_m
                        {
                            out.push(Cell(b as u32));
                        }
                    }
                }
            }
            ReachMode::Explicit { edges } => {
                for (from, tos) in edges {
                    spec.check(*from)?;
                    for to in tos {
                        spec.check(*to)?;
                        rps[from.index()].push(*to);
                    }
                }
            }
        }
        if self_loops {
            for (id, out) in rps.iter_mut().enumerate() {
                out.push(Cell(id as u32));
            }
        }
        for out in &mut rps {
            out.sort_unstable();
            out.dedup();
        }
        Ok(ReachabilityGraph { rps })
    }

    /// Graph over `domain` cells from raw adjacency lists, as given.
    pub fn from_lists(lists: Vec<Vec<Cell>>) -> Result<Self> {
        let n = lists.len();
        let mut rps = lists;
        for out in &mut rps {
            if let Some(bad) = out.iter().find(|c| c.index() >= n) {
                return Err(Error::Domain {
                    cell: bad.0,
                    domain: n,
                });
            }
            out.sort_unstable();
            out.dedup();
        }
        Ok(ReachabilityGraph { rps })
    }

    pub fn domain_size(&self) -> usize {
        self.rps.len()
    }

    pub fn contains(&self, cell: Cell) -> bool {
        cell.index() < self.rps.len()
    }

    /// Reachable next cells of `cell`, ascending.
    pub fn next(&self, cell: Cell) -> &[Cell] {
        &self.rps[cell.index()]
    }

    /// `|rps[cell]|`.
    pub fn out_degree(&self, cell: Cell) -> usize {
        self.rps[cell.index()].len()
    }

    pub fn reachable(&self, from: Cell, to: Cell) -> bool {
        self.contains(from) && self.rps[from.index()].binary_search(&to).is_ok()
    }

    /// Every consecutive pair satisfies the graph.
    pub fn is_valid(&self, traj: &[Cell]) -> bool {
        traj.iter().all(|c| self.contains(*c))
            && traj.windows(2).all(|w| self.reachable(w[0], w[1]))
    }

    pub fn is_symmetric(&self) -> bool {
        self.rps
            .iter()
            .enumerate()
            .all(|(a, outs)| outs.iter().all(|b| self.reachable(*b, Cell(a as u32))))
    }

    /// Number of reachability-valid trajectories of each length `1..=max_len`,
    /// saturating.
    pub fn walk_counts(&self, max_len: usize) -> Vec<u128> {
        let n = self.rps.len();
        let mut per_end = vec![1u128; n];
        let mut totals = Vec::with_capacity(max_len);
        for len in 1..=max_len {
            if len > 1 {
                let mut next = vec![0u128; n];
                for (a, outs) in self.rps.iter().enumerate() {
                    for b in outs {
                        next[b.index()] = next[b.index()].saturating_add(per_end[a]);
                    }
                }
                per_end = next;
            }
            totals.push(per_end.iter().fold(0u128, |s, v| s.saturating_add(*v)));
        }
        totals
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cell_with_self_loop() {
        let g = GridSpec::square(1, 1).unwrap();
        let r = ReachabilityGraph::build(&g, &ReachMode::Neighbors8, true).unwrap();
        assert_eq!(r.next(Cell(0)), &[Cell(0)]);
    }

    #[test]
    fn center_of_3x3_has_eight() {
        let g = GridSpec::square(3, 3).unwrap();
        let r = ReachabilityGraph::build(&g, &ReachMode::Neighbors8, false).unwrap();
        assert_eq!(r.out_degree(Cell(4)), 8);
        assert!(!r.reachable(Cell(4), Cell(4)));
        assert!(r.is_symmetric());
    }

    #[test]
    fn degrees_by_position() {
        let g = GridSpec::square(4, 5).unwrap();
        for self_loops in [false, true] {
            let r = ReachabilityGraph::build(&g, &ReachMode::Neighbors8, self_loops).unwrap();
            let extra = usize::from(self_loops);
            assert_eq!(r.out_degree(g.cell_at(0, 0)), 3 + extra);
            assert_eq!(r.out_degree(g.cell_at(0, 2)), 5 + extra);
            assert_eq!(r.out_degree(g.cell_at(2, 2)), 8 + extra);
        }
    }

    #[test]
    fn toy_world_explicit_verbatim() {
        let g = GridSpec::square(2, 2).unwrap();
        let c = |i: u32| Cell(i);
        let edges = vec![
            (c(0), vec![c(0), c(1)]),
            (c(1), vec![c(0), c(1), c(2), c(3)]),
            (c(2), vec![c(1), c(2), c(3)]),
            (c(3), vec![c(1), c(2), c(3)]),
        ];
        let r = ReachabilityGraph::build(
            &g,
            &ReachMode::Explicit {
                edges: edges.clone(),
            },
            true,
        )
        .unwrap();
        for (from, tos) in edges {
            assert_eq!(r.next(from), tos.as_slice());
        }
        assert!(r.is_symmetric());
    }

    #[test]
    fn explicit_outside_domain() {
        let g = GridSpec::square(2, 2).unwrap();
        let edges = vec![(Cell(0), vec![Cell(9)])];
        assert!(matches!(
            ReachabilityGraph::build(&g, &ReachMode::Explicit { edges }, false),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn speed_limit_radius() {
        let g = GridSpec::square(5, 5).unwrap();
        let step = g.center_distance_m(g.cell_at(2, 2), g.cell_at(2, 3));
        let diag = g.center_distance_m(g.cell_at(2, 2), g.cell_at(3, 3));
        // Just past the diagonal: exactly the 8-neighborhood.
        let mode = ReachMode::SpeedLimit {
            speed_mps: diag * 1.01,
            interval_s: 1.0,
        };
        let r = ReachabilityGraph::build(&g, &mode, false).unwrap();
        assert_eq!(r.out_degree(g.cell_at(2, 2)), 8);
        assert!(step < diag);
        assert!(ReachabilityGraph::build(
            &g,
            &ReachMode::SpeedLimit {
                speed_mps: 0.0,
                interval_s: 1.0
            },
            false
        )
        .is_err());
    }

    #[test]
    fn walk_counts_match_enumeration() {
        let g = GridSpec::square(2, 2).unwrap();
        let r = ReachabilityGraph::build(&g, &ReachMode::Neighbors8, false).unwrap();
        // Complete graph on 4 nodes without loops: 4 * 3^(L-1).
        assert_eq!(r.walk_counts(3), vec![4, 12, 36]);
    }
}
