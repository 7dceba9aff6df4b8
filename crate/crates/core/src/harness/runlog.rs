//! Persisted record of one (problem, method) run.
//!
//! On disk a run log is JSONL, one event per line:
//!
//! ```text
//! {"type":"meta","phase":"start","problem_id":..,"method":..,"config":{..},"seed":..,"budget_samples":..,"budget_tokens":..}
//! {"type":"sample","index":0,"prefix":{..},"suffix":{..},"reward":..,"tokens":..,"gen_secs":..,"overhead_secs":..,"depth":..}
//! {"type":"commit","step":0,"step_str":{..},"metric":..,"samples_spent":..,"committed_at":..,"kind":..}
//! {"type":"meta","phase":"end","solved":..,"best_index":..,"samples_consumed":..,"tokens_consumed":..,"error":null}
//! ```
//!
//! A log without the closing `end` event is incomplete.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{DiscError, Result};
use crate::record::{Decomposition, SampleRecord, StepRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunHeader {
    pub problem_id: String,
    pub method: String,
    /// Full configuration of the method, as run.
    pub config: serde_json::Value,
    pub seed: u64,
    pub budget_samples: usize,
    pub budget_tokens: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub solved: bool,
    pub best_index: Option<usize>,
    pub samples_consumed: usize,
    pub tokens_consumed: usize,
    /// Set when the run aborted.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub header: RunHeader,
    pub samples: Vec<SampleRecord>,
    pub steps: Vec<StepRecord>,
    /// `None` until the run has ended.
    pub summary: Option<RunSummary>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "phase", rename_all = "lowercase")]
enum Meta {
    Start(RunHeader),
    End(RunSummary),
}

#[derive(Serialize, Deserialize)]
struct Commit {
    step: usize,
    #[serde(flatten)]
    record: StepRecord,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum Event {
    Meta(Meta),
    Sample(SampleRecord),
    Commit(Commit),
}

impl RunLog {
    pub fn new(header: RunHeader) -> Self {
        RunLog { header, samples: Vec::new(), steps: Vec::new(), summary: None }
    }

    pub fn from_decomposition(header: RunHeader, decomp: &Decomposition) -> Self {
        let summary = RunSummary {
            solved: decomp.solved,
            best_index: decomp.best.as_ref().map(|b| b.index),
            samples_consumed: decomp.generated_solutions.len(),
            tokens_consumed: decomp.tokens_consumed(),
            error: None,
        };
        RunLog {
            header,
            samples: decomp.generated_solutions.clone(),
            steps: decomp.steps.clone(),
            summary: Some(summary),
        }
    }

    /// A log for a run that failed before producing a decomposition.
    pub fn failed(header: RunHeader, error: impl Into<String>) -> Self {
        RunLog {
            header,
            samples: Vec::new(),
            steps: Vec::new(),
            summary: Some(RunSummary {
                solved: false,
                best_index: None,
                samples_consumed: 0,
                tokens_consumed: 0,
                error: Some(error.into()),
            }),
        }
    }

    pub fn is_complete(&self) -> bool {
        self.summary.is_some()
    }

    pub fn solved(&self) -> bool {
        self.summary.as_ref().is_some_and(|s| s.solved)
    }

    pub fn tokens_total(&self) -> usize {
        self.samples.iter().map(|s| s.tokens).sum()
    }

    pub fn gen_secs(&self) -> f64 {
        self.samples.iter().map(|s| s.gen_secs).sum()
    }

    pub fn overhead_secs(&self) -> f64 {
        self.samples.iter().map(|s| s.overhead_secs).sum()
    }

    pub fn best(&self) -> Option<&SampleRecord> {
        let i = self.summary.as_ref()?.best_index?;
        self.samples.iter().find(|s| s.index == i)
    }

    pub fn write_jsonl(&self, mut w: impl Write) -> Result<()> {
        let mut line = |ev: &Event| -> Result<()> {
            serde_json::to_writer(&mut w, ev)?;
            w.write_all(b"\n")?;
            Ok(())
        };
        line(&Event::Meta(Meta::Start(self.header.clone())))?;
        for s in &self.samples {
            line(&Event::Sample(s.clone()))?;
        }
        for (i, s) in self.steps.iter().enumerate() {
            line(&Event::Commit(Commit { step: i, record: s.clone() }))?;
        }
        if let Some(sum) = &self.summary {
            line(&Event::Meta(Meta::End(sum.clone())))?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("JSON is UTF-8")
    }

    pub fn read_jsonl(r: impl BufRead) -> Result<Self> {
        let mut log: Option<RunLog> = None;
        for (n, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let ev: Event =
                serde_json::from_str(&line).map_err(|e| DiscError::RunLog(format!("line {}: {e}", n + 1)))?;
            match (ev, log.as_mut()) {
                (Event::Meta(Meta::Start(h)), None) => log = Some(RunLog::new(h)),
                (_, None) => return Err(DiscError::RunLog("log does not start with a start event".into())),
                (Event::Meta(Meta::Start(_)), Some(_)) => {
                    return Err(DiscError::RunLog(format!("line {}: second start event", n + 1)))
                }
                (_, Some(l)) if l.summary.is_some() => {
                    return Err(DiscError::RunLog(format!("line {}: event after the end event", n + 1)))
                }
                (Event::Sample(s), Some(l)) => l.samples.push(s),
                (Event::Commit(c), Some(l)) => {
                    if c.step != l.steps.len() {
                        return Err(DiscError::RunLog(format!("line {}: commit {} out of order", n + 1, c.step)));
                    }
                    l.steps.push(c.record)
                }
                (Event::Meta(Meta::End(s)), Some(l)) => l.summary = Some(s),
            }
        }
        log.ok_or_else(|| DiscError::RunLog("empty log".into()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        // write then rename so a crash never leaves a log that looks complete
        let tmp = path.with_extension("jsonl.partial");
        let mut f = std::io::BufWriter::new(std::fs::File::create(&tmp)?);
        self.write_jsonl(&mut f)?;
        f.flush()?;
        drop(f);
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let f = std::fs::File::open(path.as_ref())?;
        Self::read_jsonl(std::io::BufReader::new(f))
    }
}

/// Loads every `*.jsonl` log under `dir` (recursively), sorted by path.
pub fn load_dir(dir: impl AsRef<Path>) -> Result<Vec<RunLog>> {
    let mut paths = Vec::new();
    collect(dir.as_ref(), &mut paths)?;
    paths.sort();
    paths.iter().map(RunLog::load).collect()
}

fn collect(dir: &Path, out: &mut Vec<std::path::PathBuf>) -> Result<()> {
    for entry in std::fs::read_dir(dir)? {
        let p = entry?.path();
        if p.is_dir() {
            collect(&p, out)?;
        } else if p.extension().is_some_and(|e| e == "jsonl") {
            out.push(p);
        }
    }
    Ok(())
}
