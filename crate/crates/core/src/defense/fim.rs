use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ldp::OueReport;
use crate::trajectory::{Cell, Trajectory, TrajectoryDataset};

/// Frequent-item filter settings.
///
/// An item is frequent when its count is strictly above the
/// `freq_percentile` percentile of item counts. A record is dropped when the
/// share of its items that are frequent is strictly above
/// `composition`. With `until_stable` the filter is re-applied to its own
/// output until nothing more is removed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FimConfig {
    pub freq_percentile: f64,
    pub composition: f64,
    pub until_stable: bool,
}

impl Default for FimConfig {
    fn default() -> Self {
        FimConfig {
            freq_percentile: 0.9,
            composition: 0.9,
            until_stable: true,
        }
    }
}

impl FimConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("freq_percentile", self.freq_percentile),
            ("composition", self.composition),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::Config(format!(
                    "fim {name} must lie in (0, 1], got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Linear-interpolation percentile of an ascending slice, `q` in [0, 1].
pub fn percentile(sorted: &[u64], q: f64) -> f64 {
    match sorted.len() {
        0 => 0.0,
        1 => sorted[0] as f64,
        n => {
            let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            let frac = pos - lo as f64;
            sorted[lo] as f64 + (sorted[hi] as f64 - sorted[lo] as f64) * frac
        }
    }
}

fn frequent_threshold(mut counts: Vec<u64>, q: f64) -> f64 {
    counts.sort_unstable();
    percentile(&counts, q)
}

fn dominated(frequent: usize, total: usize, composition: f64) -> bool {
    total > 0 && frequent as f64 / total as f64 > composition
}

/// Repeats `pass` over the surviving records until nothing more drops
/// (or once, without `until_stable`). Returns the survivor mask.
fn fixed_point_mask(n: usize, cfg: &FimConfig, pass: impl Fn(&[bool]) -> Vec<bool>) -> Vec<bool> {
    let mut alive = vec![true; n];
    loop {
        let keep = pass(&alive);
        let mut changed = false;
        for (a, k) in alive.iter_mut().zip(keep) {
            if *a && !k {
                *a = false;
                changed = true;
            }
        }
        if !cfg.until_stable || !changed {
            return alive;
        }
    }
}

/// Cells whose occurrence count is strictly above the percentile over
/// observed cells.
pub fn frequent_cells<'a>(
    trajectories: impl IntoIterator<Item = &'a Trajectory>,
    q: f64,
) -> Vec<Cell> {
    let mut counts: HashMap<Cell, u64> = HashMap::new();
    for t in trajectories {
        for &c in t.cells() {
            *counts.entry(c).or_default() += 1;
        }
    }
    let thr = frequent_threshold(counts.values().copied().collect(), q);
    let mut out: Vec<Cell> = counts
        .into_iter()
        .filter_map(|(c, n)| (n as f64 > thr).then_some(c))
        .collect();
    out.sort_unstable();
    out
}

fn trajectory_pass(trajs: &[Trajectory], alive: &[bool], cfg: &FimConfig) -> Vec<bool> {
    let live = trajs.iter().zip(alive).filter(|(_, a)| **a).map(|(t, _)| t);
    let freq = frequent_cells(live, cfg.freq_percentile);
    trajs
        .iter()
        .map(|t| {
            let hits = t
                .cells()
                .iter()
                .filter(|c| freq.binary_search(c).is_ok())
                .count();
            !dominated(hits, t.len(), cfg.composition)
        })
        .collect()
}

/// Drops trajectories made up mostly of frequent cells.
pub fn fim_filter_trajectories(
    dataset: &TrajectoryDataset,
    cfg: &FimConfig,
) -> Result<TrajectoryDataset> {
    cfg.validate()?;
    let ts = &dataset.trajectories;
    let mask = fixed_point_mask(ts.len(), cfg, |alive| trajectory_pass(ts, alive, cfg));
    let kept = ts
        .iter()
        .zip(mask)
        .filter(|&(_, k)| k)
        .map(|(t, _)| t.clone())
        .collect();
    Ok(TrajectoryDataset::new(kept, dataset.provenance))
}

/// Frequent-index mask for one report slot, built from aggregate ones
/// counts. Lets large report streams be filtered without holding them.
#[derive(Debug, Clone)]
pub struct ReportFilter {
    frequent: Vec<bool>,
    composition: f64,
}

impl ReportFilter {
    pub fn from_counts(counts: &[u64], cfg: &FimConfig) -> Self {
        let thr = frequent_threshold(counts.to_vec(), cfg.freq_percentile);
        ReportFilter {
            frequent: counts.iter().map(|&c| c as f64 > thr).collect(),
            composition: cfg.composition,
        }
    }

    pub fn frequent_count(&self) -> usize {
        self.frequent.iter().filter(|&&f| f).count()
    }

    pub fn is_frequent(&self, index: usize) -> bool {
        self.frequent.get(index).copied().unwrap_or(false)
    }

    /// Zero-ones reports are kept: their composition is undefined.
    pub fn keeps(&self, report: &OueReport) -> bool {
        let mut total = 0;
        let mut hits = 0;
        for i in report.ones() {
            total += 1;
            hits += usize::from(self.is_frequent(i));
        }
        !dominated(hits, total, self.composition)
    }
}

fn report_pass(reports: &[&OueReport], alive: &[bool], d: usize, cfg: &FimConfig) -> Vec<bool> {
    let mut counts = vec![0u64; d];
    for (r, _) in reports.iter().zip(alive).filter(|(_, a)| **a) {
        for i in r.ones() {
            counts[i] += 1;
        }
    }
    let filter = ReportFilter::from_counts(&counts, cfg);
    reports.iter().map(|r| filter.keeps(r)).collect()
}

/// Survivor mask of the report filter over one equal-domain slot.
pub fn fim_report_mask(reports: &[&OueReport], cfg: &FimConfig) -> Result<Vec<bool>> {
    cfg.validate()?;
    let Some(first) = reports.first() else {
        return Ok(Vec::new());
    };
    let d = first.domain();
    if reports.iter().any(|r| r.domain() != d) {
        return Err(Error::Argument("reports have mixed domain sizes".into()));
    }
    Ok(fixed_point_mask(reports.len(), cfg, |alive| {
        report_pass(reports, alive, d, cfg)
    }))
}

/// Drops unary reports whose set bits sit mostly on frequent indices.
pub fn fim_filter_reports(reports: &[OueReport], cfg: &FimConfig) -> Result<Vec<OueReport>> {
    let refs: Vec<&OueReport> = reports.iter().collect();
    let mask = fim_report_mask(&refs, cfg)?;
    Ok(reports
        .iter()
        .zip(mask)
        .filter(|&(_, k)| k)
        .map(|(r, _)| r.clone())
        .collect())
}
