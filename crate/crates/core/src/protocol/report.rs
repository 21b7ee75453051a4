use std::io::{BufRead, BufReader, Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{GridTraceReport, TransitionReports};
use crate::error::{Error, Result};
use crate::ldp::OueReport;
use crate::trajectory::{Cell, Trajectory};

/// What one client uploads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PerturbedReport {
    Trajectory { cells: Trajectory },
    GridTrace(GridTraceReport),
}

impl PerturbedReport {
    pub fn as_trajectory(&self) -> Option<&Trajectory> {
        match self {
            PerturbedReport::Trajectory { cells } => Some(cells),
            PerturbedReport::GridTrace(_) => None,
        }
    }

    pub fn as_grid_trace(&self) -> Option<&GridTraceReport> {
        match self {
            PerturbedReport::GridTrace(r) => Some(r),
            PerturbedReport::Trajectory { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    #[default]
    JsonLines,
    Binary,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" | "json_lines" | "json-lines" => Ok(ReportFormat::JsonLines),
            "bin" | "binary" => Ok(ReportFormat::Binary),
            other => Err(Error::Config(format!("unknown report format {other:?}"))),
        }
    }
}

const TAG_TRAJECTORY: u8 = 0;
const TAG_GRID_TRACE: u8 = 1;

fn put_u32(buf: &mut Vec<u8>, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::Data(format!("{v} does not fit in u32")))?;
    buf.extend_from_slice(&v.to_le_bytes());
    Ok(())
}

fn put_oue(buf: &mut Vec<u8>, r: &OueReport) -> Result<()> {
    put_u32(buf, r.domain())?;
    for w in r.words() {
        buf.extend_from_slice(&w.to_le_bytes());
    }
    Ok(())
}

fn encode(report: &PerturbedReport) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    match report {
        PerturbedReport::Trajectory { cells } => {
            buf.push(TAG_TRAJECTORY);
            put_u32(&mut buf, cells.len())?;
            for c in cells.cells() {
                buf.extend_from_slice(&c.0.to_le_bytes());
            }
        }
        PerturbedReport::GridTrace(g) => {
            buf.push(TAG_GRID_TRACE);
            put_oue(&mut buf, &g.length)?;
            put_oue(&mut buf, &g.transitions.begin)?;
            put_u32(&mut buf, g.transitions.intra.len())?;
            for r in &g.transitions.intra {
                put_oue(&mut buf, r)?;
            }
            match &g.transitions.terminate {
                Some(r) => {
                    buf.push(1);
                    put_oue(&mut buf, r)?;
                }
                None => buf.push(0),
            }
        }
    }
    Ok(buf)
}

struct Cursor<'a> {
    buf: &'a [u8],
    record: u64,
}

impl Cursor<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::Parse {
            line: self.record,
            msg: msg.to_string(),
        }
    }

    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.buf.len() < n {
            return Err(self.err("truncated record"));
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn oue(&mut self) -> Result<OueReport> {
        let d = self.u32()? as usize;
        let words = (0..d.div_ceil(64))
            .map(|_| {
                Ok(u64::from_le_bytes(
                    self.take(8)?.try_into().expect("8 bytes"),
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        OueReport::from_words(d, words).map_err(|e| self.err(&e.to_string()))
    }
}

fn decode(buf: &[u8], record: u64) -> Result<PerturbedReport> {
    let mut c = Cursor { buf, record };
    let report = match c.u8()? {
        TAG_TRAJECTORY => {
            let n = c.u32()? as usize;
            let cells = (0..n)
                .map(|_| c.u32().map(Cell))
                .collect::<Result<Vec<_>>>()?;
            PerturbedReport::Trajectory {
                cells: Trajectory::new(cells),
            }
        }
        TAG_GRID_TRACE => {
            let length = c.oue()?;
            let begin = c.oue()?;
            let n = c.u32()? as usize;
            let intra = (0..n).map(|_| c.oue()).collect::<Result<Vec<_>>>()?;
            let terminate = match c.u8()? {
                0 => None,
                1 => Some(c.oue()?),
                _ => return Err(c.err("bad terminate flag")),
            };
            PerturbedReport::GridTrace(GridTraceReport {
                length,
                transitions: TransitionReports {
                    begin,
                    intra,
                    terminate,
                },
            })
        }
        _ => return Err(c.err("unknown record tag")),
    };
    if !c.buf.is_empty() {
        return Err(c.err("trailing bytes in record"));
    }
    Ok(report)
}

pub fn write_reports<W: Write>(
    mut w: W,
    reports: &[PerturbedReport],
    format: ReportFormat,
) -> Result<()> {
    for r in reports {
        match format {
            ReportFormat::JsonLines => {
                serde_json::to_writer(&mut w, r)?;
                w.write_all(b"\n")?;
            }
            ReportFormat::Binary => {
                let payload = encode(r)?;
                w.write_all(&(payload.len() as u32).to_le_bytes())?;
                w.write_all(&payload)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a whole report file. Parse errors carry the 1-based line (JSON
/// lines) or record number (binary).
pub fn read_reports<R: Read>(r: R, format: ReportFormat) -> Result<Vec<PerturbedReport>> {
    let mut out = Vec::new();
    match format {
        ReportFormat::JsonLines => {
            for (i, line) in BufReader::new(r).lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let rep = serde_json::from_str(&line).map_err(|e| Error::Parse {
                    line: i as u64 + 1,
                    msg: e.to_string(),
                })?;
                out.push(rep);
            }
        }
        ReportFormat::Binary => {
            let mut r = BufReader::new(r);
            let mut record = 0u64;
            loop {
                let mut len = [0u8; 4];
                match r.read_exact(&mut len) {
                    Ok(()) => {}
                    Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => break,
                    Err(e) => return Err(e.into()),
                }
                record += 1;
                let mut payload = vec![0u8; u32::from_le_bytes(len) as usize];
                r.read_exact(&mut payload).map_err(|_| Error::Parse {
                    line: record,
                    msg: "truncated record".into(),
                })?;
                out.push(decode(&payload, record)?);
            }
        }
    }
    Ok(out)
}
