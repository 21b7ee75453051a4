//! File formats: trajectory CSV, target-pattern CSV, and fake-set output.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::LengthDistribution;
use crate::trajectory::{Cell, TargetPattern, TargetPatternSet, Trajectory};

/// Points of one trajectory as read from disk.
#[derive(Debug, Clone, PartialEq)]
pub enum RawPoints {
    LatLon(Vec<(f64, f64)>),
    Cells(Vec<Cell>),
}

impl RawPoints {
    pub fn len(&self) -> usize {
        match self {
            RawPoints::LatLon(v) => v.len(),
            RawPoints::Cells(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawTrajectory {
    pub id: String,
    pub points: RawPoints,
}

#[derive(Clone, Copy, PartialEq)]
enum Schema {
    LatLon,
    Cell,
}

fn parse_err(line: u64, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn field<T: std::str::FromStr>(
    rec: &csv::StringRecord,
    i: usize,
    name: &str,
    line: u64,
) -> Result<T> {
    let raw = rec
        .get(i)
        .ok_or_else(|| parse_err(line, format!("missing {name}")))?;
    raw.trim()
        .parse()
        .map_err(|_| parse_err(line, format!("bad {name} {raw:?}")))
}

/// Reads `traj_id,step,lat,lon` or `traj_id,step,cell`. Rows of one
/// trajectory may appear in any order but their steps must be exactly
/// `0..len`. Trajectories come back in order of first appearance.
pub fn read_trajectory_csv<R: Read>(reader: R) -> Result<Vec<RawTrajectory>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    let names: Vec<&str> = headers.iter().collect();
    let schema = match names.as_slice() {
        ["traj_id", "step", "lat", "lon"] => Schema::LatLon,
        ["traj_id", "step", "cell"] => Schema::Cell,
        _ => {
            return Err(parse_err(
                1,
                format!("expected header traj_id,step,lat,lon or traj_id,step,cell, got {names:?}"),
            ))
        }
    };

    let mut order: Vec<String> = Vec::new();
    let mut rows: BTreeMap<String, Vec<(u64, u64, f64, f64)>> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let id = rec.get(0).unwrap_or("").to_string();
        if id.is_empty() {
            return Err(parse_err(line, "empty traj_id"));
        }
        let step: u64 = field(&rec, 1, "step", line)?;
        let (a, b) = match schema {
            Schema::LatLon => {
                let lat: f64 = field(&rec, 2, "lat", line)?;
                let lon: f64 = field(&rec, 3, "lon", line)?;
                if !lat.is_finite() || !lon.is_finite() {
                    return Err(parse_err(line, "non-finite coordinate"));
                }
                (lat, lon)
            }
            Schema::Cell => (field::<u32>(&rec, 2, "cell", line)? as f64, 0.0),
        };
        let entry = rows.entry(id.clone()).or_insert_with(|| {
            order.push(id);
            Vec::new()
        });
        entry.push((step, line, a, b));
    }

    order
        .into_iter()
        .map(|id| {
            let mut pts = rows.remove(&id).expect("recorded id");
            pts.sort_by_key(|p| p.0);
            for (expect, p) in pts.iter().enumerate() {
                if p.0 != expect as u64 {
                    return Err(parse_err(
                        p.1,
                        format!("trajectory {id}: step {} where {expect} was expected", p.0),
                    ));
                }
            }
            let points = match schema {
                Schema::LatLon => RawPoints::LatLon(pts.iter().map(|p| (p.2, p.3)).collect()),
                Schema::Cell => RawPoints::Cells(pts.iter().map(|p| Cell(p.2 as u32)).collect()),
            };
            Ok(RawTrajectory { id, points })
        })
        .collect()
}

/// Writes trajectories in the cell schema, ids `0..n`.
pub fn write_trajectory_csv<W: Write>(writer: W, trajectories: &[Trajectory]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["traj_id", "step", "cell"])
        .map_err(csv_err)?;
    for (i, t) in trajectories.iter().enumerate() {
        for (s, c) in t.cells().iter().enumerate() {
            w.write_record([i.to_string(), s.to_string(), c.0.to_string()])
                .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Data(format!("{other:?}")),
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct PatternRow {
    pattern: String,
    score: f64,
}

/// Target patterns as CSV with header `pattern,score`; the pattern is a
/// space-separated list of cell ids.
pub fn read_target_patterns<R: Read>(reader: R) -> Result<TargetPatternSet> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut out = Vec::new();
    for rec in rdr.deserialize::<PatternRow>() {
        let row = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = out.len() as u64 + 2;
        let cells = row
            .pattern
            .split_whitespace()
            .map(|s| s.parse::<u32>().map(Cell))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| parse_err(line, format!("bad pattern {:?}", row.pattern)))?;
        out.push(TargetPattern {
            pattern: Trajectory::new(cells),
            score: row.score,
        });
    }
    TargetPatternSet::new(out).map_err(|e| Error::Config(format!("target patterns: {e}")))
}

pub fn write_target_patterns<W: Write>(writer: W, tp: &TargetPatternSet) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for t in tp.patterns() {
        let pattern = t
            .pattern
            .ids()
            .map(|i| i.to_string())
            .collect::<Vec<_>>()
            .join(" ");
        w.serialize(PatternRow {
            pattern,
            score: t.score,
        })
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Sidecar describing a generated fake set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FakeSetManifest {
    pub m: usize,
    pub dist: BTreeMap<usize, usize>,
    pub max_rep: usize,
    pub seed: u64,
    pub total_score: f64,
}

impl FakeSetManifest {
    pub fn new(dist: &LengthDistribution, max_rep: usize, seed: u64, total_score: f64) -> Self {
        FakeSetManifest {
            m: dist.total(),
            dist: dist.iter().collect(),
            max_rep,
            seed,
            total_score,
        }
    }
}

/// Fake set as `traj_id,step,cell` CSV plus a JSON manifest.
pub fn write_fake_set<W1: Write, W2: Write>(
    csv_out: W1,
    manifest_out: W2,
    trajectories: &[Trajectory],
    manifest: &FakeSetManifest,
) -> Result<()> {
    write_trajectory_csv(csv_out, trajectories)?;
    serde_json::to_writer_pretty(manifest_out, manifest)?;
    Ok(())
}
