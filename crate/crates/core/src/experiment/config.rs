use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::attack::{AttackMode, DefenseConfig};
use crate::defense::FimConfig;
use crate::error::{Error, Result};
use crate::generator::LengthShape;
use crate::metrics::RankTies;
use crate::protocol::{Cleanup, DirectTrajConfig, GridTraceConfig, Protocol, TransitionDomain};
use crate::trajectory::{BoundingBox, GridSpec, ReachMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    #[default]
    Direct,
    #[serde(alias = "grid_trace")]
    Gridtrace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DefenseKind {
    None,
    Fim,
    Normalize,
}

impl DefenseKind {
    pub fn name(self) -> &'static str {
        match self {
            DefenseKind::None => "none",
            DefenseKind::Fim => "fim",
            DefenseKind::Normalize => "normalize",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub rows: u32,
    pub cols: u32,
    pub bbox: Option<BoundingBox>,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            rows: 16,
            cols: 16,
            bbox: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    #[default]
    Synthetic,
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub source: DataSource,
    /// Synthetic trajectory count.
    pub n: usize,
    pub min_len: usize,
    pub max_len: usize,
    pub path: Option<PathBuf>,
    pub sample_cap: Option<usize>,
}

impl Default for DataSection {
    fn default() -> Self {
        DataSection {
            source: DataSource::Synthetic,
            n: 4000,
            min_len: 2,
            max_len: 10,
            path: None,
            sample_cap: Some(5000),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternSource {
    #[default]
    Sampled,
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PatternSection {
    pub source: PatternSource,
    pub k_min: usize,
    pub k_max: usize,
    pub per_length: usize,
    pub path: Option<PathBuf>,
}

impl Default for PatternSection {
    fn default() -> Self {
        PatternSection {
            source: PatternSource::Sampled,
            k_min: 1,
            k_max: 6,
            per_length: 5,
            path: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridTraceSection {
    pub quantile: f64,
    pub length_fraction: f64,
    /// Length-report domain; unset means the longest collected trajectory.
    pub max_length: Option<usize>,
    pub domain: TransitionDomain,
    pub craft_length: bool,
}

impl Default for GridTraceSection {
    fn default() -> Self {
        GridTraceSection {
            quantile: 0.9,
            length_fraction: 0.1,
            max_length: None,
            domain: TransitionDomain::Full,
            craft_length: true,
        }
    }
}

/// Axes of a sweep; an empty axis means "the base value only".
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub epsilon: Vec<f64>,
    pub beta: Vec<f64>,
    pub mean_divisor: Vec<f64>,
    pub std_divisor: Vec<f64>,
}

/// Everything one experiment needs; reproducible from this and the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub repetitions: usize,
    pub protocol: ProtocolKind,
    pub epsilon: f64,
    pub beta: f64,
    pub max_rep: usize,
    pub modes: Vec<AttackMode>,
    pub defenses: Vec<DefenseKind>,
    pub rank_ties: RankTies,
    pub grid: GridSection,
    pub data: DataSection,
    pub patterns: PatternSection,
    pub lengths: LengthShape,
    pub reach: ReachMode,
    pub gridtrace: GridTraceSection,
    pub fim: FimConfig,
    pub sweep: SweepSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 7,
            repetitions: 5,
            protocol: ProtocolKind::Direct,
            epsilon: 1.0,
            beta: 0.2,
            max_rep: 1,
            modes: vec![AttackMode::None, AttackMode::Ipa, AttackMode::Opa],
            defenses: vec![DefenseKind::None],
            rank_ties: RankTies::Inclusive,
            grid: GridSection::default(),
            data: DataSection::default(),
            patterns: PatternSection::default(),
            lengths: LengthShape::default(),
            reach: ReachMode::Neighbors8,
            gridtrace: GridTraceSection::default(),
            fim: FimConfig::default(),
            sweep: SweepSection::default(),
        }
    }
}

/// Annotated template listing every key with its default.
pub const CONFIG_SCHEMA: &str = r#"# Experiment configuration (TOML). Every key is optional; the values
# below are the defaults. Relative paths resolve against this file.

seed = 7                 # run seed; every random stream derives from it
repetitions = 5          # independent repetitions, averaged
protocol = "direct"      # "direct" | "gridtrace"
epsilon = 1.0            # total privacy budget per user, > 0
beta = 0.2               # fake ratio m / (m + n), in [0, 1)
max_rep = 1              # copies allowed per fake trajectory, >= 1
modes = ["none", "ipa", "opa"]   # "none" is always run as the baseline
defenses = ["none"]      # any of "none", "fim", "normalize"
rank_ties = "inclusive"  # "inclusive" (<=) | "strict" (<)

[grid]
rows = 16
cols = 16
# bbox = { min_lat = 41.10, max_lat = 41.19, min_lon = -8.70, max_lon = -8.58 }

[data]
source = "synthetic"     # "synthetic" | "file"
n = 4000                 # synthetic trajectories
min_len = 2              # synthetic length bounds
max_len = 10
# path = "trajectories.csv"   # file source: traj_id,step,lat,lon or traj_id,step,cell
sample_cap = 5000        # keep a seeded sample of at most this many

[patterns]
source = "sampled"       # "sampled" | "file"
k_min = 1
k_max = 6
per_length = 5           # sampled patterns per length; score = length
# path = "patterns.csv"  # file source: header pattern,score

[lengths]
mean_divisor = 2.0       # fake length mean = (L_min + L_max) / mean_divisor
std_divisor = 5.0        # fake length sd = (L_max - L_min) / std_divisor

[reach]
kind = "neighbors8"      # "neighbors8" | "speed_limit" (speed_mps, interval_s)

[gridtrace]
quantile = 0.9           # length quantile broadcast as the transition cap
length_fraction = 0.1    # share of epsilon for the length report
# max_length = 10        # length-report domain; default: longest trajectory
domain = "full"          # "full" (|P|^2 pairs) | "neighbors" (8 moves per cell)
craft_length = true      # OPA fakes also craft their length report

[fim]
freq_percentile = 0.9    # frequent = count strictly above this percentile
composition = 0.9        # drop records with a larger frequent share
until_stable = true      # re-apply until nothing more is removed

[sweep]                  # empty axis = base value only
epsilon = []
beta = []
mean_divisor = []
std_divisor = []
"#;

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    /// Reads a config file, resolving relative data paths against it.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    /// Makes relative data and pattern paths relative to `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        for p in [&mut self.data.path, &mut self.patterns.path]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1".into());
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if !(0.0..1.0).contains(&self.beta) {
            return bad(format!("beta must lie in [0, 1), got {}", self.beta));
        }
        if self.max_rep == 0 {
            return bad("max_rep must be at least 1".into());
        }
        if !(self.lengths.mean_divisor > 0.0 && self.lengths.std_divisor > 0.0) {
            return bad("length divisors must be positive".into());
        }
        if self.data.source == DataSource::Synthetic
            && (self.data.n == 0 || self.data.min_len == 0 || self.data.min_len > self.data.max_len)
        {
            return bad("synthetic data needs n >= 1 and 1 <= min_len <= max_len".into());
        }
        for (what, src_file, path) in [
            (
                "data",
                self.data.source == DataSource::File,
                &self.data.path,
            ),
            (
                "patterns",
                self.patterns.source == PatternSource::File,
                &self.patterns.path,
            ),
        ] {
            if src_file {
                match path {
                    None => return bad(format!("{what}.source = \"file\" needs {what}.path")),
                    Some(p) if !p.exists() => {
                        return bad(format!("{what}.path {} does not exist", p.display()))
                    }
                    _ => {}
                }
            }
        }
        self.fim.validate()?;
        self.grid_spec()?;
        self.protocol_config()?;
        Ok(())
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        GridSpec::new(
            self.grid.rows,
            self.grid.cols,
            self.grid.bbox.unwrap_or_default(),
        )
        .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn protocol_config(&self) -> Result<Protocol> {
        self.protocol_config_for(self.data.max_len)
    }

    /// Protocol config where an unset length domain becomes `longest`.
    pub fn protocol_config_for(&self, longest: usize) -> Result<Protocol> {
        let grid = self.grid_spec()?;
        Ok(match self.protocol {
            ProtocolKind::Direct => Protocol::Direct(DirectTrajConfig::new(self.epsilon, grid)?),
            ProtocolKind::Gridtrace => {
                let g = &self.gridtrace;
                let cfg = GridTraceConfig {
                    epsilon: self.epsilon,
                    grid,
                    quantile: g.quantile,
                    length_fraction: g.length_fraction,
                    max_length: g.max_length.unwrap_or(longest.max(1)),
                    domain: g.domain,
                    cleanup: Cleanup::Clamp,
                };
                cfg.validate()?;
                Protocol::GridTrace(cfg)
            }
        })
    }

    pub fn defense_config(&self, kind: DefenseKind) -> DefenseConfig {
        match kind {
            DefenseKind::None => DefenseConfig::none(),
            DefenseKind::Fim => DefenseConfig {
                fim: Some(self.fim),
                normalize: false,
            },
            DefenseKind::Normalize => DefenseConfig::normalization(),
        }
    }

    /// SHA-256 over the canonical JSON form.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}
