use log::warn;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::BudgetLedger;
use crate::defense::{clamp_distribution, normalize_distribution, uniform, FimConfig};
use crate::error::{Error, Result};
use crate::ldp::{estimate_from_counts, oue_perturb, sample_weighted, OueParams, OueReport};
use crate::trajectory::{Cell, GridSpec, Provenance, Trajectory, TrajectoryDataset};

/// How intra-trajectory transitions are indexed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransitionDomain {
    /// Every ordered cell pair, `|P|^2` indices.
    #[default]
    Full,
    /// Cell times one of 8 compass directions, `8|P|` indices. Only
    /// 8-neighbor moves can be encoded.
    Neighbors,
}

/// Post-aggregation cleanup of noisy estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cleanup {
    /// Clamp negatives to zero, rescale.
    #[default]
    Clamp,
    /// Subtract the minimum, rescale (the normalization defense).
    Normalize,
}

const DIRS: [(i32, i32); 8] = [
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, -1),
    (0, 1),
    (1, -1),
    (1, 0),
    (1, 1),
];

fn default_quantile() -> f64 {
    0.9
}
fn default_length_fraction() -> f64 {
    0.1
}
fn default_max_length() -> usize {
    32
}

/// Transition-report protocol with server-side Markov synthesis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridTraceConfig {
    pub epsilon: f64,
    pub grid: GridSpec,
    /// Length quantile broadcast as the per-user transition cap.
    #[serde(default = "default_quantile")]
    pub quantile: f64,
    /// Share of epsilon spent on the length report.
    #[serde(default = "default_length_fraction")]
    pub length_fraction: f64,
    /// Size of the length-report domain; longer trajectories report this.
    #[serde(default = "default_max_length")]
    pub max_length: usize,
    #[serde(default)]
    pub domain: TransitionDomain,
    #[serde(default)]
    pub cleanup: Cleanup,
}

impl GridTraceConfig {
    pub fn new(epsilon: f64, grid: GridSpec) -> Result<Self> {
        let cfg = GridTraceConfig {
            epsilon,
            grid,
            quantile: default_quantile(),
            length_fraction: default_length_fraction(),
            max_length: default_max_length(),
            domain: TransitionDomain::default(),
            cleanup: Cleanup::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::Config(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if !(self.quantile > 0.0 && self.quantile <= 1.0) {
            return Err(Error::Config(format!(
                "quantile must lie in (0, 1], got {}",
                self.quantile
            )));
        }
        if !(self.length_fraction > 0.0 && self.length_fraction < 1.0) {
            return Err(Error::Config(format!(
                "length_fraction must lie in (0, 1), got {}",
                self.length_fraction
            )));
        }
        if self.max_length == 0 {
            return Err(Error::Config("max_length must be at least 1".into()));
        }
        Ok(())
    }

    pub fn length_epsilon(&self) -> f64 {
        self.epsilon * self.length_fraction
    }

    /// Budget of each of the up to `l_k + 1` transition reports.
    pub fn transition_epsilon(&self, l_k: usize) -> f64 {
        self.epsilon * (1.0 - self.length_fraction) / (l_k + 1) as f64
    }

    pub fn length_params(&self) -> OueParams {
        OueParams::new(self.max_length, self.length_epsilon()).expect("validated config")
    }

    pub fn begin_params(&self, l_k: usize) -> OueParams {
        OueParams::new(self.grid.domain_size(), self.transition_epsilon(l_k))
            .expect("validated config")
    }

    pub fn intra_params(&self, l_k: usize) -> OueParams {
        OueParams::new(self.intra_domain_size(), self.transition_epsilon(l_k))
            .expect("validated config")
    }

    pub fn terminate_params(&self, l_k: usize) -> OueParams {
        self.begin_params(l_k)
    }

    pub fn intra_domain_size(&self) -> usize {
        let p = self.grid.domain_size();
        match self.domain {
            TransitionDomain::Full => p * p,
            TransitionDomain::Neighbors => p * DIRS.len(),
        }
    }

    pub fn intra_index(&self, from: Cell, to: Cell) -> Result<usize> {
        self.grid.check(from)?;
        self.grid.check(to)?;
        let p = self.grid.domain_size();
        match self.domain {
            TransitionDomain::Full => Ok(from.index() * p + to.index()),
            TransitionDomain::Neighbors => {
                let (r0, c0) = self.grid.row_col(from);
                let (r1, c1) = self.grid.row_col(to);
                let delta = (r1 as i32 - r0 as i32, c1 as i32 - c0 as i32);
                DIRS.iter()
                    .position(|&d| d == delta)
                    .map(|k| from.index() * DIRS.len() + k)
                    .ok_or_else(|| {
                        Error::Config(format!("transition {from}->{to} is not an 8-neighbor move"))
                    })
            }
        }
    }

    /// Cells reachable from `from` in the transition domain, paired with
    /// their intra index, in index order.
    pub fn row_targets(&self, from: Cell) -> Vec<(usize, Cell)> {
        let p = self.grid.domain_size();
        match self.domain {
            TransitionDomain::Full => (0..p)
                .map(|b| (from.index() * p + b, Cell(b as u32)))
                .collect(),
            TransitionDomain::Neighbors => {
                let (r, c) = self.grid.row_col(from);
                DIRS.iter()
                    .enumerate()
                    .filter_map(|(k, &(dr, dc))| {
                        let (nr, nc) = (r as i32 + dr, c as i32 + dc);
                        let inside = nr >= 0
                            && nc >= 0
                            && (nr as u32) < self.grid.rows()
                            && (nc as u32) < self.grid.cols();
                        inside.then(|| {
                            (
                                from.index() * DIRS.len() + k,
                                self.grid.cell_at(nr as u32, nc as u32),
                            )
                        })
                    })
                    .collect()
            }
        }
    }
}

/// Item each report slot would carry for a trajectory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionItems {
    pub begin: usize,
    pub intra: Vec<usize>,
    pub terminate: Option<usize>,
}

/// Length-report item: `min(|traj|, max_length) - 1`.
pub fn length_item(traj: &Trajectory, cfg: &GridTraceConfig) -> usize {
    traj.len().clamp(1, cfg.max_length) - 1
}

/// Applies the transition cap: the first `min(l_k, |traj| - 1)` moves are
/// reported; the terminate move only when the trajectory ends within the cap.
pub fn transition_items(
    traj: &Trajectory,
    cfg: &GridTraceConfig,
    l_k: usize,
) -> Result<TransitionItems> {
    let cells = traj.cells();
    let first = *cells
        .first()
        .ok_or_else(|| Error::Argument("empty trajectory".into()))?;
    cfg.grid.check(first)?;
    let moves = (cells.len() - 1).min(l_k);
    let intra = cells
        .windows(2)
        .take(moves)
        .map(|w| cfg.intra_index(w[0], w[1]))
        .collect::<Result<Vec<_>>>()?;
    let terminate = (cells.len() - 1 < l_k).then(|| cells[cells.len() - 1].index());
    Ok(TransitionItems {
        begin: first.index(),
        intra,
        terminate,
    })
}

/// Begin, intra and terminate reports of one user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionReports {
    pub begin: OueReport,
    pub intra: Vec<OueReport>,
    pub terminate: Option<OueReport>,
}

impl TransitionReports {
    pub fn len(&self) -> usize {
        1 + self.intra.len() + usize::from(self.terminate.is_some())
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Everything one GridTrace user uploads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridTraceReport {
    pub length: OueReport,
    pub transitions: TransitionReports,
}

impl GridTraceReport {
    pub fn report_count(&self) -> usize {
        1 + self.transitions.len()
    }

    /// Budget the bundle consumed given the broadcast cap.
    pub fn budget_spent(&self, cfg: &GridTraceConfig, l_k: usize) -> f64 {
        cfg.length_epsilon() + self.transitions.len() as f64 * cfg.transition_epsilon(l_k)
    }

    /// Domain sizes match the configuration.
    pub fn check_shape(&self, cfg: &GridTraceConfig, l_k: usize) -> Result<()> {
        let p = cfg.grid.domain_size();
        let t = &self.transitions;
        let ok = self.length.domain() == cfg.max_length
            && t.begin.domain() == p
            && t.intra
                .iter()
                .all(|r| r.domain() == cfg.intra_domain_size())
            && t.terminate.as_ref().is_none_or(|r| r.domain() == p)
            && t.intra.len() + usize::from(t.terminate.is_some()) <= l_k;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(
                "report bundle does not match the protocol shape".into(),
            ))
        }
    }
}

pub fn grid_trace_length_report<R: RngCore + ?Sized>(
    traj: &Trajectory,
    cfg: &GridTraceConfig,
    rng: &mut R,
) -> Result<OueReport> {
    if traj.is_empty() {
        return Err(Error::Argument("empty trajectory".into()));
    }
    oue_perturb(length_item(traj, cfg), &cfg.length_params(), rng)
}

pub fn grid_trace_transition_reports<R: RngCore + ?Sized>(
    traj: &Trajectory,
    cfg: &GridTraceConfig,
    l_k: usize,
    rng: &mut R,
) -> Result<TransitionReports> {
    if l_k == 0 {
        return Err(Error::Argument("transition cap must be at least 1".into()));
    }
    let items = transition_items(traj, cfg, l_k)?;
    let mut ledger = BudgetLedger::new(cfg.epsilon);
    ledger.charge(cfg.length_epsilon())?;
    let eps = cfg.transition_epsilon(l_k);
    let mut send = |item: usize, params: &OueParams, rng: &mut R| {
        ledger.charge(eps)?;
        oue_perturb(item, params, rng)
    };
    let begin = send(items.begin, &cfg.begin_params(l_k), rng)?;
    let ip = cfg.intra_params(l_k);
    let intra = items
        .intra
        .iter()
        .map(|&i| send(i, &ip, rng))
        .collect::<Result<Vec<_>>>()?;
    let terminate = match items.terminate {
        Some(i) => Some(send(i, &cfg.terminate_params(l_k), rng)?),
        None => None,
    };
    Ok(TransitionReports {
        begin,
        intra,
        terminate,
    })
}

/// Honest client: one length report plus the capped transition reports.
pub fn grid_trace_client<R: RngCore + ?Sized>(
    traj: &Trajectory,
    cfg: &GridTraceConfig,
    l_k: usize,
    rng: &mut R,
) -> Result<GridTraceReport> {
    let length = grid_trace_length_report(traj, cfg, rng)?;
    let transitions = grid_trace_transition_reports(traj, cfg, l_k, rng)?;
    Ok(GridTraceReport {
        length,
        transitions,
    })
}

/// Reports regrouped by slot, as the server aggregates them. Holds
/// references so several collections can share one honest population.
#[derive(Debug, Clone, Default)]
pub struct ReportCollection<'a> {
    pub length: Vec<&'a OueReport>,
    pub begin: Vec<&'a OueReport>,
    pub intra: Vec<&'a OueReport>,
    pub terminate: Vec<&'a OueReport>,
}

impl<'a> ReportCollection<'a> {
    pub fn from_bundles(bundles: impl IntoIterator<Item = &'a GridTraceReport>) -> Self {
        let mut c = ReportCollection::default();
        for b in bundles {
            c.push(b);
        }
        c
    }

    pub fn push(&mut self, bundle: &'a GridTraceReport) {
        self.length.push(&bundle.length);
        self.push_transitions(&bundle.transitions);
    }

    pub fn push_transitions(&mut self, t: &'a TransitionReports) {
        self.begin.push(&t.begin);
        self.intra.extend(t.intra.iter());
        self.terminate.extend(t.terminate.iter());
    }

    pub fn report_count(&self) -> usize {
        self.length.len() + self.begin.len() + self.intra.len() + self.terminate.len()
    }

    /// Frequent-item filtering applied to each slot independently.
    pub fn fim_filtered(&self, fim: &FimConfig) -> Result<Self> {
        let f = |v: &Vec<&'a OueReport>| -> Result<Vec<&'a OueReport>> {
            let keep = crate::defense::fim_report_mask(v, fim)?;
            Ok(v.iter()
                .zip(keep)
                .filter_map(|(r, k)| k.then_some(*r))
                .collect())
        };
        Ok(ReportCollection {
            length: f(&self.length)?,
            begin: f(&self.begin)?,
            intra: f(&self.intra)?,
            terminate: f(&self.terminate)?,
        })
    }
}

fn slot_estimates(reports: &[&OueReport], params: &OueParams) -> Result<Vec<f64>> {
    let d = params.domain();
    let mut counts = vec![0u64; d];
    for r in reports {
        if r.domain() != d {
            return Err(Error::Config(format!(
                "report domain {} does not match slot domain {d}",
                r.domain()
            )));
        }
        for i in r.ones() {
            counts[i] += 1;
        }
    }
    Ok(estimate_from_counts(&counts, reports.len(), params))
}

/// Smallest length whose cumulative clamped mass reaches `k`. `est[i]` is
/// the estimate for length `i + 1`.
pub fn length_quantile_from_estimates(est: &[f64], k: f64, fallback: usize) -> usize {
    let Some(dist) = clamp_distribution(est) else {
        return fallback;
    };
    let mut acc = 0.0;
    for (i, p) in dist.iter().enumerate() {
        acc += p;
        if acc >= k - 1e-12 {
            return i + 1;
        }
    }
    dist.iter()
        .rposition(|&p| p > 0.0)
        .map_or(fallback, |i| i + 1)
}

/// `L_k` from length reports; falls back to `max_length` on an all-zero
/// estimate.
pub fn estimate_length_quantile(reports: &[&OueReport], cfg: &GridTraceConfig) -> Result<usize> {
    let est = slot_estimates(reports, &cfg.length_params())?;
    Ok(length_quantile_from_estimates(
        &est,
        cfg.quantile,
        cfg.max_length,
    ))
}

fn cleanup(est: &[f64], mode: Cleanup, what: &str) -> Vec<f64> {
    match mode {
        Cleanup::Normalize => normalize_distribution(est).unwrap_or_else(|_| uniform(est.len())),
        Cleanup::Clamp => clamp_distribution(est).unwrap_or_else(|| {
            warn!("{what}: no positive mass after clamping, using uniform");
            uniform(est.len())
        }),
    }
}

/// Next-step distribution out of one cell; the final weight is termination.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelRow {
    pub next: Vec<Cell>,
    pub weights: Vec<f64>,
}

/// Markov model the server synthesizes from.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisModel {
    /// `lengths[i]` is the probability of length `i + 1`.
    pub lengths: Vec<f64>,
    pub begin: Vec<f64>,
    pub rows: Vec<ModelRow>,
}

impl SynthesisModel {
    pub fn estimate(
        reports: &ReportCollection<'_>,
        cfg: &GridTraceConfig,
        l_k: usize,
    ) -> Result<Self> {
        cfg.validate()?;
        let lengths = cleanup(
            &slot_estimates(&reports.length, &cfg.length_params())?,
            cfg.cleanup,
            "length distribution",
        );
        let begin = cleanup(
            &slot_estimates(&reports.begin, &cfg.begin_params(l_k))?,
            cfg.cleanup,
            "begin distribution",
        );
        let intra = slot_estimates(&reports.intra, &cfg.intra_params(l_k))?;
        let term = slot_estimates(&reports.terminate, &cfg.terminate_params(l_k))?;
        let mut degenerate = 0;
        let rows = (0..cfg.grid.domain_size())
            .map(|a| {
                let targets = cfg.row_targets(Cell(a as u32));
                let mut est: Vec<f64> = targets.iter().map(|&(i, _)| intra[i]).collect();
                est.push(term[a]);
                let weights = match cfg.cleanup {
                    Cleanup::Clamp => clamp_distribution(&est).unwrap_or_else(|| {
                        degenerate += 1;
                        uniform(est.len())
                    }),
                    Cleanup::Normalize => cleanup(&est, Cleanup::Normalize, "row"),
                };
                ModelRow {
                    next: targets.into_iter().map(|(_, c)| c).collect(),
                    weights,
                }
            })
            .collect();
        if degenerate > 0 {
            warn!("{degenerate} transition rows had no positive mass, using uniform");
        }
        Ok(SynthesisModel {
            lengths,
            begin,
            rows,
        })
    }

    /// One trajectory: draw a length, a start cell, then step until the
    /// terminate symbol or the drawn length.
    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> Trajectory {
        let len = sample_weighted(&self.lengths, rng) + 1;
        let mut cur = Cell(sample_weighted(&self.begin, rng) as u32);
        let mut cells = vec![cur];
        while cells.len() < len {
            let row = &self.rows[cur.index()];
            let k = sample_weighted(&row.weights, rng);
            if k == row.next.len() {
                break;
            }
            cur = row.next[k];
            cells.push(cur);
        }
        Trajectory::new(cells)
    }

    pub fn synthesize<R: RngCore + ?Sized>(&self, n_out: usize, rng: &mut R) -> TrajectoryDataset {
        let trajs = (0..n_out).map(|_| self.sample(rng)).collect();
        TrajectoryDataset::new(trajs, Provenance::Synthesized)
    }
}

/// Aggregates the collected reports and synthesizes `n_out` trajectories.
pub fn grid_trace_server<R: RngCore + ?Sized>(
    reports: &ReportCollection<'_>,
    cfg: &GridTraceConfig,
    l_k: usize,
    n_out: usize,
    rng: &mut R,
) -> Result<TrajectoryDataset> {
    if reports.begin.is_empty() && reports.length.is_empty() {
        return Err(Error::Argument("no reports to aggregate".into()));
    }
    if n_out == 0 {
        return Ok(TrajectoryDataset::new(Vec::new(), Provenance::Synthesized));
    }
    Ok(SynthesisModel::estimate(reports, cfg, l_k)?.synthesize(n_out, rng))
}
