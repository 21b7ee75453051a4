use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{DataSource, DefenseKind, ExperimentConfig, PatternSource};
use super::data::{generate_synthetic, load_dataset, sample_target_patterns};
use crate::attack::{fake_count, AttackMode, DefenseConfig, PoisoningHarness};
use crate::error::{Error, Result};
use crate::generator::{
    sample_length_distribution_with, trap_generate, validate_patterns, FakeTrajectorySet,
    LengthDistribution, TrapConfig,
};
use crate::io::read_target_patterns;
use crate::metrics::{MetricReport, Metrics};
use crate::protocol::{PerturbedReport, Protocol};
use crate::rng::derive_seed;
use crate::trajectory::{ReachabilityGraph, TargetPatternSet, TrajectoryDataset};

fn stage<T>(name: &'static str, seed: u64, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Stage {
        stage: name,
        seed,
        source: Box::new(e),
    })
}

/// Inputs shared by every condition of one repetition.
#[derive(Debug, Clone)]
pub struct Workload {
    pub seed: u64,
    pub real: TrajectoryDataset,
    pub patterns: TargetPatternSet,
    pub dist: LengthDistribution,
    pub fakes: FakeTrajectorySet,
}

/// Dataset, target patterns, fake-length distribution and fake set for
/// one repetition seed.
pub fn prepare_workload(cfg: &ExperimentConfig, seed: u64) -> Result<Workload> {
    let grid = stage("config", seed, cfg.grid_spec())?;
    let rps = stage(
        "config",
        seed,
        ReachabilityGraph::build(&grid, &cfg.reach, false),
    )?;
    let real = stage(
        "data",
        seed,
        match cfg.data.source {
            DataSource::Synthetic => generate_synthetic(
                &grid,
                cfg.data.n,
                cfg.data.min_len,
                cfg.data.max_len,
                derive_seed(seed, "data", 0),
            ),
            DataSource::File => {
                let path = cfg
                    .data
                    .path
                    .as_ref()
                    .ok_or_else(|| Error::Config("data.path missing".into()))?;
                load_dataset(path, &grid, &rps, cfg.data.sample_cap, cfg.seed).map(|l| l.dataset)
            }
        },
    )?;
    let patterns = stage(
        "patterns",
        seed,
        match cfg.patterns.source {
            PatternSource::Sampled => sample_target_patterns(
                &real,
                cfg.patterns.k_min,
                cfg.patterns.k_max,
                cfg.patterns.per_length,
                derive_seed(seed, "patterns", 0),
            ),
            PatternSource::File => {
                let path = cfg
                    .patterns
                    .path
                    .as_ref()
                    .ok_or_else(|| Error::Config("patterns.path missing".into()))?;
                std::fs::File::open(path)
                    .map_err(|e| Error::Config(format!("cannot open {}: {e}", path.display())))
                    .and_then(read_target_patterns)
            }
        },
    )?;
    let (l_min, l_max) = real.length_bounds().expect("non-empty dataset");
    let m = stage("lengths", seed, fake_count(cfg.beta, real.len()))?;
    let dist = stage(
        "lengths",
        seed,
        sample_length_distribution_with(
            m,
            l_min,
            l_max,
            cfg.lengths,
            derive_seed(seed, "lengths", 0),
        ),
    )?;
    let fakes = if m == 0 {
        FakeTrajectorySet::from_trajectories(Vec::new())
    } else {
        stage("patterns", seed, validate_patterns(&rps, &patterns))?;
        stage(
            "fakes",
            seed,
            trap_generate(&rps, &patterns, &dist, &TrapConfig::new(cfg.max_rep)),
        )?
    };
    Ok(Workload {
        seed,
        real,
        patterns,
        dist,
        fakes,
    })
}

/// Metrics of one (mode, defense) condition in one repetition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionRun {
    pub mode: AttackMode,
    pub defense: DefenseKind,
    pub metrics: Metrics,
    pub removed: usize,
    pub l_k: Option<usize>,
}

fn harness_for<'w>(cfg: &ExperimentConfig, w: &'w Workload) -> Result<PoisoningHarness<'w>> {
    let seed = w.seed;
    let longest = w.real.length_bounds().map_or(1, |b| b.1);
    let protocol = stage("config", seed, cfg.protocol_config_for(longest))?;
    Ok(stage(
        "collect",
        seed,
        PoisoningHarness::new(
            &w.real.trajectories,
            protocol,
            derive_seed(seed, "collect", 0),
        ),
    )?
    .craft_length(cfg.gridtrace.craft_length))
}

/// What the fake users of this workload upload under `mode` with no
/// defense, identical to what `run_conditions` collects.
pub fn fake_submissions(
    cfg: &ExperimentConfig,
    w: &Workload,
    mode: AttackMode,
) -> Result<Vec<PerturbedReport>> {
    let mut harness = harness_for(cfg, w)?;
    let l_k = match harness.protocol() {
        Protocol::GridTrace(_) => {
            stage(
                "collect",
                w.seed,
                harness.run(&w.fakes.trajectories, mode, &DefenseConfig::none()),
            )?
            .l_k
        }
        Protocol::Direct(_) => None,
    };
    stage(
        "collect",
        w.seed,
        harness.fake_submissions(&w.fakes.trajectories, mode, l_k),
    )
}

/// Runs every configured condition on a prepared workload. The no-attack
/// baseline is always included.
pub fn run_conditions(cfg: &ExperimentConfig, w: &Workload) -> Result<Vec<ConditionRun>> {
    let seed = w.seed;
    let mut harness = harness_for(cfg, w)?;
    let mut modes = cfg.modes.clone();
    modes.push(AttackMode::None);
    modes.sort();
    modes.dedup();
    let mut defenses = cfg.defenses.clone();
    if defenses.is_empty() {
        defenses.push(DefenseKind::None);
    }
    defenses.sort();
    defenses.dedup();
    let mut out = Vec::new();
    for &defense in &defenses {
        let dcfg = cfg.defense_config(defense);
        for &mode in &modes {
            let run = stage(
                "collect",
                seed,
                harness.run(&w.fakes.trajectories, mode, &dcfg),
            )?;
            let metrics = if run.dataset.is_empty() {
                Metrics {
                    avg_score: 0.0,
                    avg_pr: 0.0,
                }
            } else {
                stage(
                    "metrics",
                    seed,
                    Metrics::evaluate(&run.dataset.trajectories, &w.patterns, cfg.rank_ties),
                )?
            };
            out.push(ConditionRun {
                mode,
                defense,
                metrics,
                removed: run.removed,
                l_k: run.l_k,
            });
        }
    }
    Ok(out)
}

/// One condition averaged over repetitions; gains are against the
/// no-attack run under the same defense.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub mode: AttackMode,
    pub defense: DefenseKind,
    pub avg_score: f64,
    pub avg_pr: f64,
    pub score_gain: f64,
    pub pr_gain: f64,
    pub removed: f64,
    pub per_seed: Vec<MetricReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config_digest: String,
    pub seed: u64,
    pub protocol: String,
    pub epsilon: f64,
    pub beta: f64,
    pub mean_divisor: f64,
    pub std_divisor: f64,
    pub repetitions: usize,
    pub fakes_per_repetition: Vec<usize>,
    pub wall_clock_s: f64,
    pub conditions: Vec<ConditionReport>,
}

impl RunReport {
    pub fn condition(&self, mode: AttackMode, defense: DefenseKind) -> Option<&ConditionReport> {
        self.conditions
            .iter()
            .find(|c| c.mode == mode && c.defense == defense)
    }
}

pub fn repetition_seed(cfg: &ExperimentConfig, rep: usize) -> u64 {
    derive_seed(cfg.seed, "repetition", rep as u64)
}

/// Runs all repetitions (concurrently) and averages per condition.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.validate()?;
    let start = Instant::now();
    let digest = cfg.digest();
    let reps: Vec<(usize, Vec<ConditionRun>)> = (0..cfg.repetitions)
        .into_par_iter()
        .map(|r| {
            let seed = repetition_seed(cfg, r);
            let w = prepare_workload(cfg, seed)?;
            Ok((w.fakes.len(), run_conditions(cfg, &w)?))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut grouped: BTreeMap<(DefenseKind, AttackMode), Vec<(MetricReport, usize)>> =
        BTreeMap::new();
    for (r, (_, runs)) in reps.iter().enumerate() {
        let seed = repetition_seed(cfg, r);
        for c in runs {
            let base = runs
                .iter()
                .find(|b| b.defense == c.defense && b.mode == AttackMode::None)
                .expect("baseline always runs");
            grouped.entry((c.defense, c.mode)).or_default().push((
                MetricReport::from_runs(&base.metrics, &c.metrics, &digest, seed),
                c.removed,
            ));
        }
    }
    let mean = |v: &[(MetricReport, usize)], f: &dyn Fn(&MetricReport) -> f64| {
        v.iter().map(|(m, _)| f(m)).sum::<f64>() / v.len() as f64
    };
    let conditions = grouped
        .into_iter()
        .map(|((defense, mode), v)| ConditionReport {
            mode,
            defense,
            avg_score: mean(&v, &|m| m.avg_score),
            avg_pr: mean(&v, &|m| m.avg_pr),
            score_gain: mean(&v, &|m| m.score_gain),
            pr_gain: mean(&v, &|m| m.pr_gain),
            removed: v.iter().map(|(_, r)| *r as f64).sum::<f64>() / v.len() as f64,
            per_seed: v.into_iter().map(|(m, _)| m).collect(),
        })
        .collect();
    Ok(RunReport {
        config_digest: digest,
        seed: cfg.seed,
        protocol: format!("{:?}", cfg.protocol).to_lowercase(),
        epsilon: cfg.epsilon,
        beta: cfg.beta,
        mean_divisor: cfg.lengths.mean_divisor,
        std_divisor: cfg.lengths.std_divisor,
        repetitions: cfg.repetitions,
        fakes_per_repetition: reps.iter().map(|(m, _)| *m).collect(),
        wall_clock_s: start.elapsed().as_secs_f64(),
        conditions,
    })
}

/// The configurations a sweep expands to, in row-major axis order
/// (epsilon, beta, mean divisor, std divisor).
pub fn sweep_configs(cfg: &ExperimentConfig) -> Vec<ExperimentConfig> {
    let axis = |v: &Vec<f64>, base: f64| if v.is_empty() { vec![base] } else { v.clone() };
    let eps = axis(&cfg.sweep.epsilon, cfg.epsilon);
    let betas = axis(&cfg.sweep.beta, cfg.beta);
    let means = axis(&cfg.sweep.mean_divisor, cfg.lengths.mean_divisor);
    let stds = axis(&cfg.sweep.std_divisor, cfg.lengths.std_divisor);
    let mut out = Vec::new();
    for &e in &eps {
        for &b in &betas {
            for &a in &means {
                for &s in &stds {
                    let mut c = cfg.clone();
                    c.epsilon = e;
                    c.beta = b;
                    c.lengths.mean_divisor = a;
                    c.lengths.std_divisor = s;
                    c.sweep = Default::default();
                    out.push(c);
                }
            }
        }
    }
    out
}

/// One report per sweep cell, computed concurrently, returned in cell order.
pub fn sweep(cfg: &ExperimentConfig) -> Result<Vec<RunReport>> {
    sweep_configs(cfg).par_iter().map(run_experiment).collect()
}

/// Per-condition CSV rows for plotting.
pub fn write_reports_csv<W: Write>(w: W, reports: &[RunReport]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "protocol",
        "epsilon",
        "beta",
        "mean_divisor",
        "std_divisor",
        "defense",
        "mode",
        "avg_score",
        "avg_pr",
        "score_gain",
        "pr_gain",
        "removed",
        "config_digest",
    ])
    .map_err(|e| Error::Data(e.to_string()))?;
    for r in reports {
        for c in &r.conditions {
            out.write_record([
                r.protocol.clone(),
                r.epsilon.to_string(),
                r.beta.to_string(),
                r.mean_divisor.to_string(),
                r.std_divisor.to_string(),
                c.defense.name().to_string(),
                c.mode.name().to_string(),
                c.avg_score.to_string(),
                c.avg_pr.to_string(),
                c.score_gain.to_string(),
                c.pr_gain.to_string(),
                c.removed.to_string(),
                r.config_digest.clone(),
            ])
            .map_err(|e| Error::Data(e.to_string()))?;
        }
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::ProtocolKind;
    use crate::trajectory::Trajectory;

    fn small() -> ExperimentConfig {
        let mut c = ExperimentConfig::default();
        c.grid.rows = 6;
        c.grid.cols = 6;
        c.data.n = 300;
        c.data.max_len = 6;
        c.patterns.k_max = 3;
        c.patterns.per_length = 3;
        c.repetitions = 2;
        c
    }

    #[test]
    fn zero_beta_has_zero_gains() {
        let mut c = small();
        c.beta = 0.0;
        let r = run_experiment(&c).unwrap();
        for cond in &r.conditions {
            assert_eq!(cond.score_gain, 0.0);
            assert_eq!(cond.pr_gain, 0.0);
        }
    }

    #[test]
    fn submissions_match_the_collected_fakes() {
        let c = small();
        let w = prepare_workload(&c, 1).unwrap();
        let opa = fake_submissions(&c, &w, AttackMode::Opa).unwrap();
        let sent: Vec<&Trajectory> = opa.iter().filter_map(|r| r.as_trajectory()).collect();
        assert_eq!(sent, w.fakes.trajectories.iter().collect::<Vec<_>>());
        assert!(fake_submissions(&c, &w, AttackMode::None)
            .unwrap()
            .is_empty());

        let mut g = small();
        g.protocol = ProtocolKind::Gridtrace;
        let longest = w.real.length_bounds().unwrap().1;
        let Protocol::GridTrace(gcfg) = g.protocol_config_for(longest).unwrap() else {
            unreachable!()
        };
        for mode in [AttackMode::Ipa, AttackMode::Opa] {
            let subs = fake_submissions(&g, &w, mode).unwrap();
            assert_eq!(subs.len(), w.fakes.len());
            for r in &subs {
                let b = r.as_grid_trace().unwrap();
                assert!(b.report_count() <= gcfg.max_length + 2);
                assert_eq!(b.transitions.begin.domain(), gcfg.grid.domain_size());
            }
        }
    }

    #[test]
    fn rerun_is_identical() {
        let c = small();
        let a = run_experiment(&c).unwrap();
        let b = run_experiment(&c).unwrap();
        assert_eq!(a.config_digest, b.config_digest);
        assert_eq!(a.conditions, b.conditions);
    }

    #[test]
    fn sweep_grid_is_complete() {
        let mut c = small();
        c.sweep.epsilon = vec![0.5, 1.0];
        c.sweep.std_divisor = vec![4.0, 5.0, 6.0];
        let cells = sweep_configs(&c);
        assert_eq!(cells.len(), 6);
        assert_eq!((cells[5].epsilon, cells[5].lengths.std_divisor), (1.0, 6.0));
    }

    #[test]
    fn stage_errors_name_the_stage() {
        let mut c = small();
        c.patterns.per_length = 100_000;
        let err = run_experiment(&c).unwrap_err();
        assert!(
            matches!(
                err,
                Error::Stage {
                    stage: "patterns",
                    ..
                }
            ),
            "{err}"
        );
    }
}
