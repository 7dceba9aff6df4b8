//! Pass-rate curves, per-step analytics, and timing breakdowns computed from
//! run logs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::runlog::RunLog;
use crate::stats::reward_stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BudgetAxis {
    Samples,
    Tokens,
}

/// `(budget, value)` points with strictly increasing budgets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub axis: BudgetAxis,
    pub points: Vec<(usize, f64)>,
}

impl Curve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("budget,value\n");
        for (b, v) in &self.points {
            out.push_str(&format!("{b},{v}\n"));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("curves serialize")
    }

    pub fn value_at(&self, budget: usize) -> Option<f64> {
        self.points.iter().find(|(b, _)| *b == budget).map(|(_, v)| *v)
    }
}

/// Number of samples drawn up to and including the first correct one.
pub fn solve_count(log: &RunLog) -> Option<usize> {
    log.samples.iter().position(|s| s.is_correct()).map(|i| i + 1)
}

/// Tokens generated up to and including the first correct sample.
pub fn solve_tokens(log: &RunLog) -> Option<usize> {
    let mut total = 0;
    for s in &log.samples {
        total += s.tokens;
        if s.is_correct() {
            return Some(total);
        }
    }
    None
}

fn sorted_budgets(budgets: &[usize]) -> Vec<usize> {
    let mut b = budgets.to_vec();
    b.sort_unstable();
    b.dedup();
    b
}

fn pass_curve(logs: &[RunLog], budgets: &[usize], axis: BudgetAxis, at: impl Fn(&RunLog) -> Option<usize>) -> Curve {
    let solved_at: Vec<Option<usize>> = logs.iter().map(at).collect();
    let points = sorted_budgets(budgets)
        .into_iter()
        .map(|b| {
            let hits = solved_at.iter().filter(|s| s.is_some_and(|i| i <= b)).count();
            let value = if logs.is_empty() { 0.0 } else { hits as f64 / logs.len() as f64 };
            (b, value)
        })
        .collect();
    Curve { axis, points }
}

/// Fraction of problems (one log each) solved within `k` samples.
pub fn pass_at_k(logs: &[RunLog], ks: &[usize]) -> Curve {
    pass_curve(logs, ks, BudgetAxis::Samples, solve_count)
}

/// Fraction of problems solved within a generated-token budget.
pub fn pass_at_token(logs: &[RunLog], budgets: &[usize]) -> Curve {
    pass_curve(logs, budgets, BudgetAxis::Tokens, solve_tokens)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepGroup {
    /// Committed steps in the prefix the samples were drawn from.
    pub step: usize,
    pub samples: usize,
    pub reward_mean: f64,
    pub reward_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionStats {
    /// Number of committed steps per run -> number of runs.
    pub histogram: BTreeMap<usize, usize>,
    pub per_step: Vec<StepGroup>,
}

pub fn partition_stats(logs: &[RunLog]) -> PartitionStats {
    let mut histogram = BTreeMap::new();
    let mut groups: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for log in logs {
        *histogram.entry(log.steps.len()).or_insert(0) += 1;
        for s in &log.samples {
            groups.entry(s.depth).or_default().push(s.reward);
        }
    }
    let per_step = groups
        .into_iter()
        .map(|(step, rewards)| {
            let st = reward_stats(&rewards);
            StepGroup { step, samples: rewards.len(), reward_mean: st.mean, reward_std: st.std }
        })
        .collect();
    PartitionStats { histogram, per_step }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverheadReport {
    pub generation_secs: f64,
    pub overhead_secs: f64,
    pub generation_fraction: f64,
    pub overhead_fraction: f64,
}

/// Share of wall time spent in backend generation versus everything else.
/// With no recorded time at all both shares are reported as zero-time
/// overhead (generation 0, overhead 1).
pub fn overhead_report(logs: &[RunLog]) -> OverheadReport {
    let generation_secs: f64 = logs.iter().map(RunLog::gen_secs).sum();
    let overhead_secs: f64 = logs.iter().map(RunLog::overhead_secs).sum();
    let total = generation_secs + overhead_secs;
    let generation_fraction = if total > 0.0 { generation_secs / total } else { 0.0 };
    OverheadReport {
        generation_secs,
        overhead_secs,
        generation_fraction,
        overhead_fraction: 1.0 - generation_fraction,
    }
}

/// Best reward among the first `k` samples of a run.
pub fn best_within(log: &RunLog, k: usize) -> Option<f64> {
    log.samples.iter().take(k).map(|s| s.reward).reduce(f64::max)
}
