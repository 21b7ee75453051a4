use std::collections::HashMap;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::craft::{craft_opa_direct, craft_opa_length, craft_opa_transitions};
use crate::defense::{fim_filter_trajectories, fim_report_mask, FimConfig};
use crate::error::{Error, Result};
use crate::ldp::OueReport;
use crate::protocol::{
    direct_traj_perturb, estimate_length_quantile, grid_trace_client, grid_trace_length_report,
    grid_trace_server, grid_trace_transition_reports, Cleanup, DirectTrajConfig, GridTraceConfig,
    GridTraceReport, PerturbedReport, Protocol, ReportCollection, TransitionReports,
};
use crate::rng::stream;
use crate::trajectory::{Provenance, Trajectory, TrajectoryDataset};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackMode {
    /// No fake users.
    None,
    /// Fake users run the honest client on fake trajectories.
    Ipa,
    /// Fake users send crafted reports directly.
    Opa,
}

impl AttackMode {
    pub fn name(self) -> &'static str {
        match self {
            AttackMode::None => "none",
            AttackMode::Ipa => "ipa",
            AttackMode::Opa => "opa",
        }
    }
}

/// Number of fake users for a fake ratio `beta = m / (m + n)`.
pub fn fake_count(beta: f64, n: usize) -> Result<usize> {
    if !(0.0..1.0).contains(&beta) {
        return Err(Error::Config(format!(
            "beta must lie in [0, 1), got {beta}"
        )));
    }
    Ok((beta * n as f64 / (1.0 - beta)).round() as usize)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackConfig {
    pub mode: AttackMode,
    pub beta: f64,
    /// Whether OPA fakes also craft their length report.
    #[serde(default = "yes")]
    pub craft_length: bool,
    pub seed: u64,
}

fn yes() -> bool {
    true
}

impl AttackConfig {
    pub fn validate(&self) -> Result<()> {
        fake_count(self.beta, 0).map(|_| ())
    }
}

/// Server-side countermeasures for one run.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DefenseConfig {
    pub fim: Option<FimConfig>,
    /// Min-shift normalization of GridTrace estimates instead of clamping.
    pub normalize: bool,
}

impl DefenseConfig {
    pub fn none() -> Self {
        DefenseConfig::default()
    }

    pub fn fim() -> Self {
        DefenseConfig {
            fim: Some(FimConfig::default()),
            normalize: false,
        }
    }

    pub fn normalization() -> Self {
        DefenseConfig {
            fim: None,
            normalize: true,
        }
    }
}

/// Fakes through the honest client. `l_k` is only used by GridTrace.
pub fn run_ipa(
    protocol: &Protocol,
    fakes: &[Trajectory],
    l_k: usize,
    seed: u64,
) -> Result<Vec<PerturbedReport>> {
    fakes
        .par_iter()
        .enumerate()
        .map(|(j, t)| {
            let mut rng = stream(seed, "ipa", j as u64);
            Ok(match protocol {
                Protocol::Direct(c) => PerturbedReport::Trajectory {
                    cells: direct_traj_perturb(t, c, &mut rng)?,
                },
                Protocol::GridTrace(c) => {
                    PerturbedReport::GridTrace(grid_trace_client(t, c, l_k, &mut rng)?)
                }
            })
        })
        .collect()
}

/// What the fake users submit to DirectTraj. OPA output draws no
/// randomness, so it does not depend on the privacy budget.
pub fn direct_fake_reports(
    cfg: &DirectTrajConfig,
    fakes: &[Trajectory],
    mode: AttackMode,
    seed: u64,
) -> Result<Vec<Trajectory>> {
    for f in fakes {
        for &c in f.cells() {
            cfg.grid
                .check(c)
                .map_err(|e| Error::Config(format!("fake trajectory: {e}")))?;
        }
    }
    Ok(match mode {
        AttackMode::None => Vec::new(),
        AttackMode::Ipa => fakes
            .par_iter()
            .enumerate()
            .map(|(j, t)| direct_traj_perturb(t, cfg, &mut stream(seed, "fake", j as u64)))
            .collect::<Result<Vec<_>>>()?,
        AttackMode::Opa => craft_opa_direct(fakes)
            .into_iter()
            .filter_map(|r| match r {
                PerturbedReport::Trajectory { cells } => Some(cells),
                PerturbedReport::GridTrace(_) => None,
            })
            .collect(),
    })
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub dataset: TrajectoryDataset,
    /// Broadcast transition cap (GridTrace only).
    pub l_k: Option<usize>,
    /// Reports (GridTrace) or trajectories (DirectTraj) the FIM filter dropped.
    pub removed: usize,
}

/// Runs one population of honest users against several attack conditions.
///
/// Honest perturbations are drawn once per user from streams derived from
/// the seed and reused across conditions, so conditions differ only in
/// what the fake users contribute.
pub struct PoisoningHarness<'a> {
    real: &'a [Trajectory],
    protocol: Protocol,
    seed: u64,
    craft_length: bool,
    honest_direct: Option<Vec<Trajectory>>,
    honest_length: Option<Vec<OueReport>>,
    honest_transitions: HashMap<usize, Vec<TransitionReports>>,
}

impl<'a> PoisoningHarness<'a> {
    pub fn new(real: &'a [Trajectory], protocol: Protocol, seed: u64) -> Result<Self> {
        if real.is_empty() {
            return Err(Error::Data("no real trajectories to collect".into()));
        }
        match &protocol {
            Protocol::Direct(c) => c.validate()?,
            Protocol::GridTrace(c) => c.validate()?,
        }
        Ok(PoisoningHarness {
            real,
            protocol,
            seed,
            craft_length: true,
            honest_direct: None,
            honest_length: None,
            honest_transitions: HashMap::new(),
        })
    }

    pub fn craft_length(mut self, yes: bool) -> Self {
        self.craft_length = yes;
        self
    }

    pub fn protocol(&self) -> &Protocol {
        &self.protocol
    }

    pub fn run(
        &mut self,
        fakes: &[Trajectory],
        mode: AttackMode,
        defense: &DefenseConfig,
    ) -> Result<RunOutput> {
        let fakes = if mode == AttackMode::None {
            &[][..]
        } else {
            fakes
        };
        match self.protocol.clone() {
            Protocol::Direct(c) => self.run_direct(&c, fakes, mode, defense),
            Protocol::GridTrace(c) => self.run_grid_trace(&c, fakes, mode, defense),
        }
    }

    fn run_direct(
        &mut self,
        cfg: &DirectTrajConfig,
        fakes: &[Trajectory],
        mode: AttackMode,
        defense: &DefenseConfig,
    ) -> Result<RunOutput> {
        let seed = self.seed;
        if self.honest_direct.is_none() {
            let out = self
                .real
                .par_iter()
                .enumerate()
                .map(|(i, t)| direct_traj_perturb(t, cfg, &mut stream(seed, "honest", i as u64)))
                .collect::<Result<Vec<_>>>()?;
            self.honest_direct = Some(out);
        }
        let fake_reports = direct_fake_reports(cfg, fakes, mode, seed)?;
        let mut all: Vec<Trajectory> = self.honest_direct.as_ref().expect("filled above").clone();
        all.extend(fake_reports);
        all.shuffle(&mut stream(seed, "shuffle", 0));
        let collected = TrajectoryDataset::new(all, Provenance::Real);
        let (dataset, removed) = match &defense.fim {
            Some(f) => {
                let kept = fim_filter_trajectories(&collected, f)?;
                let removed = collected.len() - kept.len();
                (kept, removed)
            }
            None => (collected, 0),
        };
        Ok(RunOutput {
            dataset,
            l_k: None,
            removed,
        })
    }

    fn run_grid_trace(
        &mut self,
        base: &GridTraceConfig,
        fakes: &[Trajectory],
        mode: AttackMode,
        defense: &DefenseConfig,
    ) -> Result<RunOutput> {
        let seed = self.seed;
        let mut cfg = base.clone();
        if defense.normalize {
            cfg.cleanup = Cleanup::Normalize;
        }
        if self.honest_length.is_none() {
            let out = self
                .real
                .par_iter()
                .enumerate()
                .map(|(i, t)| grid_trace_length_report(t, &cfg, &mut stream(seed, "len", i as u64)))
                .collect::<Result<Vec<_>>>()?;
            self.honest_length = Some(out);
        }
        let fake_length = grid_fake_length(&cfg, fakes, mode, self.craft_length, seed)?;
        let mut removed = 0;
        let length_refs: Vec<&OueReport> = self
            .honest_length
            .as_ref()
            .expect("filled above")
            .iter()
            .chain(&fake_length)
            .collect();
        let length_refs = filter_slot(length_refs, defense.fim.as_ref(), &mut removed)?;
        let l_k = estimate_length_quantile(&length_refs, &cfg)?;

        if !self.honest_transitions.contains_key(&l_k) {
            let out = self
                .real
                .par_iter()
                .enumerate()
                .map(|(i, t)| {
                    grid_trace_transition_reports(
                        t,
                        &cfg,
                        l_k,
                        &mut stream(seed, "trans", i as u64),
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            self.honest_transitions.insert(l_k, out);
        }
        let fake_trans = grid_fake_transitions(&cfg, fakes, mode, l_k, seed)?;

        let mut col = ReportCollection::default();
        for t in self.honest_transitions[&l_k].iter().chain(&fake_trans) {
            col.push_transitions(t);
        }
        col.length = length_refs;
        let fim = defense.fim.as_ref();
        col.begin = filter_slot(col.begin, fim, &mut removed)?;
        col.intra = filter_slot(col.intra, fim, &mut removed)?;
        col.terminate = filter_slot(col.terminate, fim, &mut removed)?;

        let n_out = self.real.len() + fakes.len();
        let dataset = grid_trace_server(&col, &cfg, l_k, n_out, &mut stream(seed, "synth", 0))?;
        Ok(RunOutput {
            dataset,
            l_k: Some(l_k),
            removed,
        })
    }
}

impl PoisoningHarness<'_> {
    /// The uploads of the fake users under `mode`, drawn from the same
    /// streams `run` uses. GridTrace needs the broadcast cap of the run.
    pub fn fake_submissions(
        &self,
        fakes: &[Trajectory],
        mode: AttackMode,
        l_k: Option<usize>,
    ) -> Result<Vec<PerturbedReport>> {
        if mode == AttackMode::None {
            return Ok(Vec::new());
        }
        match &self.protocol {
            Protocol::Direct(c) => Ok(direct_fake_reports(c, fakes, mode, self.seed)?
                .into_iter()
                .map(|cells| PerturbedReport::Trajectory { cells })
                .collect()),
            Protocol::GridTrace(c) => {
                let l_k = l_k.ok_or_else(|| {
                    Error::Argument("GridTrace submissions need the broadcast cap".into())
                })?;
                let length = grid_fake_length(c, fakes, mode, self.craft_length, self.seed)?;
                let trans = grid_fake_transitions(c, fakes, mode, l_k, self.seed)?;
                Ok(length
                    .into_iter()
                    .zip(trans)
                    .map(|(length, transitions)| {
                        PerturbedReport::GridTrace(GridTraceReport {
                            length,
                            transitions,
                        })
                    })
                    .collect())
            }
        }
    }
}

fn grid_fake_length(
    cfg: &GridTraceConfig,
    fakes: &[Trajectory],
    mode: AttackMode,
    craft_length: bool,
    seed: u64,
) -> Result<Vec<OueReport>> {
    fakes
        .par_iter()
        .enumerate()
        .map(|(j, t)| {
            let mut rng = stream(seed, "fake-len", j as u64);
            match mode {
                AttackMode::Opa => craft_opa_length(t, cfg, craft_length, &mut rng),
                _ => grid_trace_length_report(t, cfg, &mut rng),
            }
        })
        .collect()
}

fn grid_fake_transitions(
    cfg: &GridTraceConfig,
    fakes: &[Trajectory],
    mode: AttackMode,
    l_k: usize,
    seed: u64,
) -> Result<Vec<TransitionReports>> {
    fakes
        .par_iter()
        .enumerate()
        .map(|(j, t)| {
            let mut rng = stream(seed, "fake-trans", j as u64);
            match mode {
                AttackMode::Opa => craft_opa_transitions(t, cfg, l_k, &mut rng),
                _ => grid_trace_transition_reports(t, cfg, l_k, &mut rng),
            }
        })
        .collect::<Result<Vec<_>>>()
        .map_err(|e| match e {
            Error::Domain { .. } | Error::Config(_) => {
                Error::Config(format!("fake trajectory does not fit the protocol: {e}"))
            }
            other => other,
        })
}

fn filter_slot<'r>(
    slot: Vec<&'r OueReport>,
    fim: Option<&FimConfig>,
    removed: &mut usize,
) -> Result<Vec<&'r OueReport>> {
    let Some(f) = fim else {
        return Ok(slot);
    };
    let mask = fim_report_mask(&slot, f)?;
    let before = slot.len();
    let kept: Vec<&OueReport> = slot
        .into_iter()
        .zip(mask)
        .filter_map(|(r, k)| k.then_some(r))
        .collect();
    *removed += before - kept.len();
    Ok(kept)
}

/// Honest users plus fakes through one protocol, one condition.
pub fn assemble_poisoned_run(
    real: &TrajectoryDataset,
    fakes: &[Trajectory],
    mode: AttackMode,
    protocol: &Protocol,
    defense: &DefenseConfig,
    seed: u64,
) -> Result<TrajectoryDataset> {
    let mut h = PoisoningHarness::new(&real.trajectories, protocol.clone(), seed)?;
    Ok(h.run(fakes, mode, defense)?.dataset)
}
