//! Grid cells, trajectories, target patterns and reachability.

mod discretize;
mod grid;
mod pattern;
mod reach;

pub use discretize::{discretize, line_between};
pub use grid::{haversine_m, BoundingBox, Cell, GridSpec};
pub use pattern::{
    count_pattern, traj_score, PatternIndex, TargetPattern, TargetPatternSet, Trajectory,
};
pub use reach::{ReachMode, ReachabilityGraph};

use serde::{Deserialize, Serialize};

/// Where a dataset came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Real,
    Fake,
    Synthesized,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryDataset {
    pub trajectories: Vec<Trajectory>,
    pub provenance: Provenance,
}

impl TrajectoryDataset {
    pub fn new(trajectories: Vec<Trajectory>, provenance: Provenance) -> Self {
        TrajectoryDataset {
            trajectories,
            provenance,
        }
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Trajectory> {
        self.trajectories.iter()
    }

    /// Shortest and longest trajectory length.
    pub fn length_bounds(&self) -> Option<(usize, usize)> {
        let min = self.trajectories.iter().map(|t| t.len()).min()?;
        let max = self.trajectories.iter().map(|t| t.len()).max()?;
        Some((min, max))
    }
}
