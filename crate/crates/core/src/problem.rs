use std::collections::HashSet;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::backends::verifier::VerifierSpec;
use crate::error::{DiscError, Result};
use crate::seq::{TextSeq, UnitScheme};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub id: String,
    pub prompt: TextSeq,
    /// Absent for synthetic suites, which carry their own reward model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verifier: Option<VerifierSpec>,
}

impl Problem {
    pub fn new(id: impl Into<String>, prompt: TextSeq, verifier: Option<VerifierSpec>) -> Result<Self> {
        let id = id.into();
        if prompt.is_empty() {
            return Err(DiscError::ProblemSet(format!("problem {id:?} has an empty prompt")));
        }
        Ok(Problem { id, prompt, verifier })
    }

    /// The part of `solution` generated after the prompt. Solutions that do
    /// not start with the prompt are returned whole.
    pub fn response<'a>(&self, solution: &'a TextSeq) -> &'a str {
        solution
            .as_str()
            .strip_prefix(self.prompt.as_str())
            .unwrap_or(solution.as_str())
    }
}

#[derive(Deserialize)]
struct ProblemLine {
    id: String,
    prompt: String,
    verifier: VerifierSpec,
    #[serde(default)]
    scheme: UnitScheme,
}

/// Reads a JSONL problem set: one `{"id", "prompt", "verifier"}` object per
/// line. Blank lines are skipped.
pub fn read_problem_set(reader: impl BufRead) -> Result<Vec<Problem>> {
    let mut problems = Vec::new();
    let mut seen = HashSet::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: ProblemLine = serde_json::from_str(&line)
            .map_err(|e| DiscError::ProblemSet(format!("line {}: {e}", lineno + 1)))?;
        if !seen.insert(raw.id.clone()) {
            return Err(DiscError::ProblemSet(format!("line {}: duplicate id {:?}", lineno + 1, raw.id)));
        }
        problems.push(Problem::new(raw.id, TextSeq::new(raw.prompt, raw.scheme), Some(raw.verifier))?);
    }
    Ok(problems)
}

pub fn load_problem_set(path: impl AsRef<Path>) -> Result<Vec<Problem>> {
    let file = std::fs::File::open(path.as_ref())?;
    read_problem_set(std::io::BufReader::new(file))
}
