//! Records produced by a search run.

use serde::{Deserialize, Serialize};

use crate::policy::CORRECT_REWARD;
use crate::seq::TextSeq;
use crate::stats::ZScore;

/// One policy rollout `prefix · suffix` and its reward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    /// Global draw order, starting at 0.
    pub index: usize,
    pub prefix: TextSeq,
    pub suffix: TextSeq,
    pub reward: f64,
    pub tokens: usize,
    pub gen_secs: f64,
    pub overhead_secs: f64,
    /// Number of committed steps in the prefix this sample was drawn from.
    pub depth: usize,
}

impl SampleRecord {
    pub fn solution(&self) -> TextSeq {
        self.prefix.concat(&self.suffix)
    }

    pub fn is_correct(&self) -> bool {
        self.reward >= CORRECT_REWARD
    }

    /// The same rollout viewed from a shorter prefix that it extends.
    pub fn rebased(&self, prefix: &TextSeq) -> Option<SampleRecord> {
        let suffix = self.solution().strip_prefix(prefix)?;
        Some(SampleRecord { prefix: prefix.clone(), suffix, ..self.clone() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    /// Committed because the acceptance criterion (or metric rule) chose it.
    Accepted,
    /// The remaining suffix could not be split further and was committed whole.
    Terminal,
    /// A sample reached the correctness threshold; the step is its remainder.
    Solved,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step_str: TextSeq,
    pub metric: ZScore,
    /// Samples drawn while this step was being searched for.
    pub samples_spent: usize,
    /// Global draw count at the moment of commit.
    pub committed_at: usize,
    pub kind: StepKind,
}

/// One accept/reject decision of a step search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundTrace {
    pub base_units: usize,
    pub proposal_units: usize,
    pub alpha: f64,
    pub base_max: f64,
    pub cand_max: f64,
    pub base_z: ZScore,
    pub cand_z: ZScore,
    pub accepted: bool,
    pub drawn: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub prompt: TextSeq,
    pub steps: Vec<StepRecord>,
    /// Every drawn sample, in draw order. Seeded copies are not repeated.
    pub generated_solutions: Vec<SampleRecord>,
    /// The returned solution; it extends `prompt · steps`.
    pub best: Option<SampleRecord>,
    pub solved: bool,
    /// Accept/reject decisions in order (step-search engines only).
    pub rounds: Vec<RoundTrace>,
}

impl Decomposition {
    pub fn new(prompt: TextSeq) -> Self {
        Decomposition {
            prompt,
            steps: Vec::new(),
            generated_solutions: Vec::new(),
            best: None,
            solved: false,
            rounds: Vec::new(),
        }
    }

    /// `prompt · step_1 · ... · step_n`.
    pub fn committed_prefix(&self) -> TextSeq {
        self.steps.iter().fold(self.prompt.clone(), |acc, s| acc.concat(&s.step_str))
    }

    /// The highest-reward drawn sample (earliest on ties).
    pub fn best_generated(&self) -> Option<&SampleRecord> {
        argmax_earliest(&self.generated_solutions)
    }

    pub fn tokens_consumed(&self) -> usize {
        self.generated_solutions.iter().map(|s| s.tokens).sum()
    }
}

/// First sample with the maximal reward.
pub fn argmax_earliest(samples: &[SampleRecord]) -> Option<&SampleRecord> {
    let mut best: Option<&SampleRecord> = None;
    for s in samples {
        if best.is_none_or(|b| s.reward > b.reward) {
            best = Some(s);
        }
    }
    best
}
