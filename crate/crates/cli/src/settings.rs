//! Config file plus command-line overrides.

use std::path::{Path, PathBuf};

use clap::Args;
use toml::{Table, Value};
use trap_core::experiment::ExperimentConfig;
use trap_core::{Error, Result};

#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// Experiment config (TOML); see --print-schema.
    #[arg(long, short, global = true)]
    pub config: Option<PathBuf>,

    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[arg(long, global = true)]
    pub epsilon: Option<f64>,

    #[arg(long, global = true)]
    pub beta: Option<f64>,

    /// direct | gridtrace
    #[arg(long, global = true)]
    pub protocol: Option<String>,

    #[arg(long, global = true)]
    pub max_rep: Option<usize>,

    #[arg(long, global = true)]
    pub repetitions: Option<usize>,

    /// Any config key, e.g. `--set gridtrace.domain=neighbors`. The value
    /// is read as TOML, falling back to a plain string.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub set: Vec<String>,
}

fn parse_value(raw: &str) -> Value {
    format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

fn set_key(table: &mut Table, key: &str, value: Value) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("bad config key {key:?}")));
    }
    let mut cur = table;
    for part in &parts[..parts.len() - 1] {
        let entry = cur
            .entry(part.to_string())
            .or_insert_with(|| Value::Table(Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("{key}: {part} is not a table")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

impl ConfigArgs {
    /// File values, then `--set`, then the named flags. File-relative
    /// paths resolve against the file; `--set` paths against the cwd.
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let mut table = match &self.config {
            Some(p) => std::fs::read_to_string(p)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?
                .parse::<Table>()
                .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?,
            None => Table::new(),
        };
        let base = self
            .config
            .as_deref()
            .and_then(Path::parent)
            .unwrap_or(Path::new(""))
            .to_path_buf();
        for section in ["data", "patterns"] {
            if let Some(Value::String(p)) = table.get_mut(section).and_then(|s| s.get_mut("path")) {
                let joined = base.join(&*p);
                *p = joined.to_string_lossy().into_owned();
            }
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got {kv:?}")))?;
            set_key(&mut table, k.trim(), parse_value(v.trim()))?;
        }
        let int = |k: &str, v: Option<u64>| -> Result<Option<Value>> {
            v.map(|v| {
                i64::try_from(v)
                    .map(Value::Integer)
                    .map_err(|_| Error::Config(format!("--{k} {v} is too large")))
            })
            .transpose()
        };
        let named = [
            ("seed", int("seed", self.seed)?),
            ("epsilon", self.epsilon.map(Value::Float)),
            ("beta", self.beta.map(Value::Float)),
            ("protocol", self.protocol.clone().map(Value::String)),
            ("max_rep", int("max-rep", self.max_rep.map(|v| v as u64))?),
            (
                "repetitions",
                int("repetitions", self.repetitions.map(|v| v as u64))?,
            ),
        ];
        for (k, v) in named {
            if let Some(v) = v {
                table.insert(k.to_string(), v);
            }
        }
        let text = toml::to_string(&table).map_err(|e| Error::Config(e.to_string()))?;
        let cfg = ExperimentConfig::from_toml(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}
