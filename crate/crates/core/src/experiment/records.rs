use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::swarm::{JumpRecord, SwarmEvent};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunHeader {
    pub run_id: String,
    pub series: String,
    pub seed: u64,
    pub jumps: u64,
    pub walkers: usize,
    pub tail_frac: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
}

/// One line of `events.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LogLine {
    Header(RunHeader),
    Jump(JumpRecord),
    Event(SwarmEvent),
}

/// Everything one `(series, seed)` cell produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub header: RunHeader,
    pub jumps: Vec<JumpRecord>,
    pub events: Vec<SwarmEvent>,
}

impl RunLog {
    /// Header first, then for each jump its walker records followed by its
    /// events.
    pub fn lines(&self) -> Vec<LogLine> {
        let mut out = Vec::with_capacity(1 + self.jumps.len() + self.events.len());
        out.push(LogLine::Header(self.header.clone()));
        let (mut j, mut e) = (0, 0);
        for t in 0..=self.header.jumps {
            while j < self.jumps.len() && self.jumps[j].t == t {
                out.push(LogLine::Jump(self.jumps[j].clone()));
                j += 1;
            }
            while e < self.events.len() && self.events[e].t == t {
                out.push(LogLine::Event(self.events[e].clone()));
                e += 1;
            }
        }
        out.extend(self.jumps[j..].iter().cloned().map(LogLine::Jump));
        out.extend(self.events[e..].iter().cloned().map(LogLine::Event));
        out
    }
}

pub fn write_logs(path: &Path, logs: &[RunLog]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::file(path, e))?;
    let mut w = BufWriter::new(file);
    for log in logs {
        for line in log.lines() {
            serde_json::to_writer(&mut w, &line)?;
            w.write_all(b"\n")?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Parses an `events.jsonl` file back into runs, in file order.
pub fn read_logs(path: &Path) -> Result<Vec<RunLog>> {
    let file = File::open(path).map_err(|e| Error::file(path, e))?;
    let mut logs: Vec<RunLog> = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: LogLine = serde_json::from_str(&line)
            .map_err(|e| Error::Log(format!("line {}: {e}", n + 1)))?;
        match parsed {
            LogLine::Header(h) => {
                if logs.iter().any(|l| l.header.run_id == h.run_id) {
                    return Err(Error::Log(format!("duplicate run '{}'", h.run_id)));
                }
                logs.push(RunLog {
                    header: h,
                    jumps: Vec::new(),
                    events: Vec::new(),
                });
            }
            LogLine::Jump(r) => run_for(&mut logs, &r.run_id, n)?.jumps.push(r),
            LogLine::Event(ev) => run_for(&mut logs, &ev.run_id, n)?.events.push(ev),
        }
    }
    Ok(logs)
}

fn run_for<'a>(logs: &'a mut [RunLog], id: &str, n: usize) -> Result<&'a mut RunLog> {
    logs.iter_mut()
        .rev()
        .find(|l| l.header.run_id == id)
        .ok_or_else(|| Error::Log(format!("line {}: record for run '{id}' before its header", n + 1)))
}
