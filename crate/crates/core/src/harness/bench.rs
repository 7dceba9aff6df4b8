//! Synthetic benchmark: several methods on seeded instances of one suite,
//! summarized as mean best reward per budget.
//!
//! Report schema (JSON):
//!
//! ```text
//! {
//!   "suite": "planted" | "wiener",
//!   "seeds": int, "base_seed": int, "budgets": [int],
//!   "methods": [{"method": str, "points": [{"budget": int, "mean_best": float,
//!                "ci_low": float, "ci_high": float, "solve_rate": float}]}],
//!   "comparisons": [{"method": str, "baseline": str, "budget": int,
//!                    "n": int, "mean_diff": float, "t": float, "p_value": float}]
//! }
//! ```

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::analysis::{bootstrap_mean_ci, paired_t_test};
use super::method::{run_logged, Method, RunSettings};
use super::metrics::best_within;
use super::runlog::RunLog;
use crate::backends::synthetic::{suite_instance, SuiteConfig, SyntheticSuite};
use crate::error::{DiscError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthBenchConfig {
    pub suite: SyntheticSuite,
    #[serde(default)]
    pub suite_config: SuiteConfig,
    pub methods: Vec<Method>,
    /// Number of seeded instances.
    pub seeds: usize,
    #[serde(default)]
    pub base_seed: u64,
    /// Report points; runs use the largest as their sample budget.
    pub budgets: Vec<usize>,
    #[serde(default)]
    pub settings: RunSettings,
    #[serde(default = "default_resamples")]
    pub bootstrap_resamples: usize,
    /// Compare every other method against this one with a paired t-test.
    #[serde(default)]
    pub baseline: Option<Method>,
    #[serde(default)]
    pub parallel: bool,
}

fn default_resamples() -> usize {
    1000
}

impl SynthBenchConfig {
    /// Wiener paths have no correctness threshold, so inference mode (stop
    /// at reward >= 1) is off for that suite.
    pub fn new(suite: SyntheticSuite, methods: Vec<Method>, seeds: usize, budgets: Vec<usize>) -> Self {
        let mut settings = RunSettings::default();
        settings.search.engine.inference_mode = suite != SyntheticSuite::Wiener;
        SynthBenchConfig {
            suite,
            suite_config: SuiteConfig::default(),
            methods,
            seeds,
            base_seed: 0,
            budgets,
            settings,
            bootstrap_resamples: default_resamples(),
            baseline: Some(Method::Bon),
            parallel: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetPoint {
    pub budget: usize,
    pub mean_best: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub solve_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: Method,
    pub points: Vec<BudgetPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub method: Method,
    pub baseline: Method,
    pub budget: usize,
    pub n: usize,
    pub mean_diff: f64,
    pub t: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthReport {
    pub suite: SyntheticSuite,
    pub seeds: usize,
    pub base_seed: u64,
    pub budgets: Vec<usize>,
    pub methods: Vec<MethodReport>,
    pub comparisons: Vec<Comparison>,
}

/// Seed of instance `i`; also the engine's run seed for that instance.
pub fn instance_seed(base_seed: u64, i: usize) -> u64 {
    base_seed.wrapping_add(i as u64)
}

/// Runs every method on every instance. Logs are grouped by method in the
/// order of `cfg.methods`, instances in seed order.
pub fn run_synth_logs(cfg: &SynthBenchConfig) -> Result<Vec<(Method, Vec<RunLog>)>> {
    if cfg.seeds == 0 || cfg.budgets.is_empty() || cfg.methods.is_empty() {
        return Err(DiscError::Config("synth bench needs seeds >= 1, budgets, and methods".into()));
    }
    if cfg.budgets.contains(&0) {
        return Err(DiscError::Config("budgets must be >= 1".into()));
    }
    let budget = *cfg.budgets.iter().max().expect("non-empty");
    let one = |method: Method, i: usize| -> Result<RunLog> {
        let seed = instance_seed(cfg.base_seed, i);
        let inst = suite_instance(cfg.suite, &cfg.suite_config, seed)?;
        let mut settings = cfg.settings.clone();
        settings.search.engine.budget_samples = budget;
        settings.search.engine.rng_seed = seed;
        Ok(run_logged(method, &inst.problem, &*inst.policy, &*inst.reward, &settings))
    };
    cfg.methods
        .iter()
        .map(|&m| {
            let logs: Result<Vec<RunLog>> = if cfg.parallel {
                (0..cfg.seeds).into_par_iter().map(|i| one(m, i)).collect()
            } else {
                (0..cfg.seeds).map(|i| one(m, i)).collect()
            };
            Ok((m, logs?))
        })
        .collect()
}

/// Summarizes logs from [`run_synth_logs`].
pub fn synth_report(cfg: &SynthBenchConfig, logs: &[(Method, Vec<RunLog>)]) -> SynthReport {
    let mut budgets = cfg.budgets.clone();
    budgets.sort_unstable();
    budgets.dedup();
    let bests = |runs: &[RunLog], k: usize| -> Vec<f64> {
        runs.iter().map(|l| best_within(l, k).unwrap_or(f64::NEG_INFINITY)).collect()
    };
    let methods = logs
        .iter()
        .map(|(m, runs)| MethodReport {
            method: *m,
            points: budgets
                .iter()
                .map(|&k| {
                    let vals = bests(runs, k);
                    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                    let (ci_low, ci_high) = bootstrap_mean_ci(&vals, cfg.bootstrap_resamples, 0.95, cfg.base_seed ^ k as u64);
                    let solved = runs.iter().filter(|l| l.samples.iter().take(k).any(|s| s.is_correct())).count();
                    BudgetPoint { budget: k, mean_best: mean, ci_low, ci_high, solve_rate: solved as f64 / runs.len() as f64 }
                })
                .collect(),
        })
        .collect();
    let mut comparisons = Vec::new();
    if let Some(base) = cfg.baseline {
        if let Some((_, base_runs)) = logs.iter().find(|(m, _)| *m == base) {
            for (m, runs) in logs.iter().filter(|(m, _)| *m != base) {
                for &k in &budgets {
                    if let Some(t) = paired_t_test(&bests(runs, k), &bests(base_runs, k)) {
                        comparisons.push(Comparison {
                            method: *m,
                            baseline: base,
                            budget: k,
                            n: t.n,
                            mean_diff: t.mean_diff,
                            t: t.t,
                            p_value: t.p_value,
                        });
                    }
                }
            }
        }
    }
    SynthReport { suite: cfg.suite, seeds: cfg.seeds, base_seed: cfg.base_seed, budgets, methods, comparisons }
}

pub fn synth_bench(cfg: &SynthBenchConfig) -> Result<SynthReport> {
    let logs = run_synth_logs(cfg)?;
    Ok(synth_report(cfg, &logs))
}
