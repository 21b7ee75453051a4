use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::BudgetLedger;
use crate::error::{Error, Result};
use crate::ldp::{em_weights, sample_weighted};
use crate::trajectory::{Cell, GridSpec, Trajectory};

/// Full-trajectory protocol: every point is replaced through the
/// exponential mechanism with utility `-(distance to the true cell)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectTrajConfig {
    pub epsilon: f64,
    pub grid: GridSpec,
}

impl DirectTrajConfig {
    pub fn new(epsilon: f64, grid: GridSpec) -> Result<Self> {
        let cfg = DirectTrajConfig { epsilon, grid };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::Config(format!(
                "epsilon must be positive and finite, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }

    pub fn point_epsilon(&self, len: usize) -> f64 {
        self.epsilon / len as f64
    }
}

/// Perturbs each point independently with budget `eps / |traj|`.
pub fn direct_traj_perturb<R: RngCore + ?Sized>(
    traj: &Trajectory,
    cfg: &DirectTrajConfig,
    rng: &mut R,
) -> Result<Trajectory> {
    if traj.is_empty() {
        return Err(Error::Argument("cannot perturb an empty trajectory".into()));
    }
    let grid = &cfg.grid;
    let d = grid.domain_size();
    let eps = cfg.point_epsilon(traj.len());
    let mut ledger = BudgetLedger::new(cfg.epsilon);
    let mut out = Vec::with_capacity(traj.len());
    let mut utilities = vec![0.0; d];
    for &cell in traj.cells() {
        grid.check(cell)?;
        ledger.charge(eps)?;
        if d == 1 {
            out.push(cell);
            continue;
        }
        for (j, u) in utilities.iter_mut().enumerate() {
            *u = -grid.cell_distance(cell, Cell(j as u32));
        }
        let w = em_weights(&utilities, eps);
        out.push(Cell(sample_weighted(&w, rng) as u32));
    }
    Ok(Trajectory::new(out))
}
