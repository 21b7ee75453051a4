use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use trap_core::attack::{fake_count, AttackMode};
use trap_core::experiment::{
    fake_submissions, generate_synthetic, load_dataset, prepare_workload, repetition_seed,
    run_experiment, sample_target_patterns, sweep, write_reports_csv, DataSource, ExperimentConfig,
    PatternSource, RunReport,
};
use trap_core::generator::{
    brute_force_generate, sample_length_distribution_with, trap_generate, TrapConfig,
    DEFAULT_ENUMERATION_CAP,
};
use trap_core::io::{
    read_target_patterns, write_fake_set, write_target_patterns, write_trajectory_csv,
    FakeSetManifest,
};
use trap_core::metrics::{MetricReport, Metrics};
use trap_core::protocol::{write_reports, ReportFormat};
use trap_core::trajectory::{traj_score, ReachabilityGraph, TargetPatternSet, TrajectoryDataset};
use trap_core::{Error, Result};

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Data(format!("cannot create {}: {e}", path.display())))
}

fn reach(cfg: &ExperimentConfig) -> Result<ReachabilityGraph> {
    ReachabilityGraph::build(&cfg.grid_spec()?, &cfg.reach, false)
}

/// `path` if given, else the configured data source.
fn real_dataset(cfg: &ExperimentConfig, path: Option<&Path>) -> Result<TrajectoryDataset> {
    let grid = cfg.grid_spec()?;
    let path = path.or(match cfg.data.source {
        DataSource::File => cfg.data.path.as_deref(),
        DataSource::Synthetic => None,
    });
    match path {
        Some(p) => {
            let loaded = load_dataset(p, &grid, &reach(cfg)?, cfg.data.sample_cap, cfg.seed)?;
            if loaded.excluded + loaded.sampled_out > 0 {
                eprintln!(
                    "{}: {} excluded by reachability, {} sampled out",
                    p.display(),
                    loaded.excluded,
                    loaded.sampled_out
                );
            }
            Ok(loaded.dataset)
        }
        None => generate_synthetic(
            &grid,
            cfg.data.n,
            cfg.data.min_len,
            cfg.data.max_len,
            cfg.seed,
        ),
    }
}

fn read_patterns(path: &Path) -> Result<TargetPatternSet> {
    let f = File::open(path)
        .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
    read_target_patterns(f)
}

/// `path` if given, else the configured pattern source.
fn target_patterns(
    cfg: &ExperimentConfig,
    real: &TrajectoryDataset,
    path: Option<&Path>,
) -> Result<TargetPatternSet> {
    let path = path.or(match cfg.patterns.source {
        PatternSource::File => cfg.patterns.path.as_deref(),
        PatternSource::Sampled => None,
    });
    match path {
        Some(p) => read_patterns(p),
        None => sample_target_patterns(
            real,
            cfg.patterns.k_min,
            cfg.patterns.k_max,
            cfg.patterns.per_length,
            cfg.seed,
        ),
    }
}

fn write_json<T: serde::Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    match path {
        Some(p) => {
            let mut w = create(p)?;
            serde_json::to_writer_pretty(&mut w, value)?;
            w.write_all(b"\n")?;
            w.flush()?;
        }
        None => {
            let mut out = std::io::stdout().lock();
            serde_json::to_writer_pretty(&mut out, value)?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}

fn summarize(r: &RunReport) {
    eprintln!(
        "{} eps={} beta={} a={} b={} ({} reps, {:.1}s)",
        r.protocol, r.epsilon, r.beta, r.mean_divisor, r.std_divisor, r.repetitions, r.wall_clock_s
    );
    for c in &r.conditions {
        eprintln!(
            "  {:>9} {:>4}  score {:.4} ({:+.4})  pr {:.2} ({:+.2})  removed {:.1}",
            c.defense.name(),
            c.mode.name(),
            c.avg_score,
            c.score_gain,
            c.avg_pr,
            c.pr_gain,
            c.removed
        );
    }
}

#[derive(Debug, Args)]
pub struct SynthData {
    #[arg(long, short)]
    out: PathBuf,
    /// Overrides data.n.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    min_len: Option<usize>,
    #[arg(long)]
    max_len: Option<usize>,
}

impl SynthData {
    pub fn run(self, cfg: &ExperimentConfig) -> Result<()> {
        let ds = generate_synthetic(
            &cfg.grid_spec()?,
            self.n.unwrap_or(cfg.data.n),
            self.min_len.unwrap_or(cfg.data.min_len),
            self.max_len.unwrap_or(cfg.data.max_len),
            cfg.seed,
        )?;
        write_trajectory_csv(create(&self.out)?, &ds.trajectories)?;
        eprintln!("wrote {} trajectories to {}", ds.len(), self.out.display());
        Ok(())
    }
}

#[derive(Debug, Args)]
pub struct SamplePatterns {
    /// Trajectory CSV; defaults to the configured data source.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, short)]
    out: PathBuf,
}

impl SamplePatterns {
    pub fn run(self, cfg: &ExperimentConfig) -> Result<()> {
        let real = real_dataset(cfg, self.data.as_deref())?;
        let tp = sample_target_patterns(
            &real,
            cfg.patterns.k_min,
            cfg.patterns.k_max,
            cfg.patterns.per_length,
            cfg.seed,
        )?;
        write_target_patterns(create(&self.out)?, &tp)?;
        eprintln!("wrote {} patterns to {}", tp.len(), self.out.display());
        Ok(())
    }
}

#[derive(Debug, Args)]
pub struct GenerateFakes {
    /// Trajectory CSV; defaults to the configured data source.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Pattern CSV; defaults to the configured pattern source.
    #[arg(long)]
    patterns: Option<PathBuf>,
    /// Number of fakes; defaults to what beta implies for the data.
    #[arg(long)]
    m: Option<usize>,
    /// Fake length bounds; default to the data's.
    #[arg(long)]
    min_len: Option<usize>,
    #[arg(long)]
    max_len: Option<usize>,
    /// Use exhaustive enumeration instead of the heuristic.
    #[arg(long)]
    brute_force: bool,
    /// Per-length enumeration cap for --brute-force.
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    cap: u128,
    #[arg(long, short)]
    out: PathBuf,
    /// Defaults to `<out>.manifest.json`.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

impl GenerateFakes {
    pub fn run(self, cfg: &ExperimentConfig) -> Result<()> {
        let real = real_dataset(cfg, self.data.as_deref())?;
        let tp = target_patterns(cfg, &real, self.patterns.as_deref())?;
        let (lo, hi) = real.length_bounds().expect("loaded datasets are non-empty");
        let m = match self.m {
            Some(m) => m,
            None => fake_count(cfg.beta, real.len())?,
        };
        let dist = sample_length_distribution_with(
            m,
            self.min_len.unwrap_or(lo),
            self.max_len.unwrap_or(hi),
            cfg.lengths,
            cfg.seed,
        )?;
        let rps = reach(cfg)?;
        let fakes = if self.brute_force {
            brute_force_generate(&rps, &tp, &dist, cfg.max_rep, self.cap)?
        } else {
            trap_generate(&rps, &tp, &dist, &TrapConfig::new(cfg.max_rep))?
        };
        let total: f64 = fakes
            .trajectories
            .iter()
            .map(|t| traj_score(t.cells(), &tp))
            .sum();
        let manifest_path = self.manifest.unwrap_or_else(|| {
            let mut p = self.out.clone().into_os_string();
            p.push(".manifest.json");
            p.into()
        });
        let manifest = FakeSetManifest::new(&dist, cfg.max_rep, cfg.seed, total);
        let mut csv_out = create(&self.out)?;
        let mut json_out = create(&manifest_path)?;
        write_fake_set(&mut csv_out, &mut json_out, &fakes.trajectories, &manifest)?;
        csv_out.flush()?;
        json_out.flush()?;
        eprintln!(
            "wrote {} fakes (total score {total}) to {}",
            fakes.len(),
            self.out.display()
        );
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FakeMode {
    Ipa,
    Opa,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Jsonl,
    Binary,
}

#[derive(Debug, Args)]
pub struct Attack {
    /// RunReport JSON; stdout when omitted.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Per-condition CSV rows.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Also write the fake users' uploads from the first repetition.
    #[arg(long)]
    emit_reports: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "opa")]
    emit_mode: FakeMode,
    #[arg(long, value_enum, default_value = "jsonl")]
    report_format: Format,
}

impl Attack {
    pub fn run(self, cfg: &ExperimentConfig) -> Result<()> {
        let report = run_experiment(cfg)?;
        summarize(&report);
        write_json(self.json.as_deref(), &report)?;
        if let Some(p) = &self.csv {
            let mut w = create(p)?;
            write_reports_csv(&mut w, std::slice::from_ref(&report))?;
            w.flush()?;
        }
        if let Some(p) = &self.emit_reports {
            let w = prepare_workload(cfg, repetition_seed(cfg, 0))?;
            let mode = match self.emit_mode {
                FakeMode::Ipa => AttackMode::Ipa,
                FakeMode::Opa => AttackMode::Opa,
            };
            let reports = fake_submissions(cfg, &w, mode)?;
            let format = match self.report_format {
                Format::Jsonl => ReportFormat::JsonLines,
                Format::Binary => ReportFormat::Binary,
            };
            write_reports(create(p)?, &reports, format)?;
            eprintln!("wrote {} fake reports to {}", reports.len(), p.display());
        }
        Ok(())
    }
}

#[derive(Debug, Args)]
pub struct Evaluate {
    /// Trajectory CSV to score.
    #[arg(long)]
    data: PathBuf,
    /// Target pattern CSV.
    #[arg(long)]
    patterns: PathBuf,
    /// Reference dataset; adds score and PR gains over it.
    #[arg(long)]
    baseline: Option<PathBuf>,
    /// Metrics JSON; stdout when omitted.
    #[arg(long)]
    json: Option<PathBuf>,
}

impl Evaluate {
    pub fn run(self, cfg: &ExperimentConfig) -> Result<()> {
        let tp = read_patterns(&self.patterns)?;
        let grid = cfg.grid_spec()?;
        let rps = reach(cfg)?;
        let metrics = |p: &Path| -> Result<Metrics> {
            let ds = load_dataset(p, &grid, &rps, None, cfg.seed)?;
            if ds.excluded > 0 {
                eprintln!("{}: {} excluded by reachability", p.display(), ds.excluded);
            }
            Metrics::evaluate(&ds.dataset.trajectories, &tp, cfg.rank_ties)
        };
        let after = metrics(&self.data)?;
        let before = match &self.baseline {
            Some(b) => metrics(b)?,
            None => after,
        };
        let report = MetricReport::from_runs(&before, &after, &cfg.digest(), cfg.seed);
        write_json(self.json.as_deref(), &report)
    }
}

#[derive(Debug, Args)]
pub struct Sweep {
    /// JSON array of RunReports; stdout when omitted.
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

impl Sweep {
    pub fn run(self, cfg: &ExperimentConfig) -> Result<()> {
        let reports = sweep(cfg)?;
        for r in &reports {
            summarize(r);
        }
        write_json(self.json.as_deref(), &reports)?;
        if let Some(p) = &self.csv {
            let mut w = create(p)?;
            write_reports_csv(&mut w, &reports)?;
            w.flush()?;
        }
        Ok(())
    }
}
