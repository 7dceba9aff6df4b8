//! Uniform entry point over every search method.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::runlog::{RunHeader, RunLog};
use crate::baselines::{best_of_n, step_search_with_lines, static_split_search, BaselineKind};
use crate::engine::{greedy_disc, metric_split_decomposition};
use crate::error::{DiscError, Result};
use crate::policy::{GenerationPolicy, RewardModel};
use crate::problem::Problem;
use crate::record::Decomposition;
use crate::search::{beam_disc, mcts_disc, SearchConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Disc,
    DiscMetric,
    Mcts,
    Beam,
    Bon,
    #[serde(rename = "tokensplit")]
    TokenSplit,
    #[serde(rename = "linesplit")]
    LineSplit,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Disc,
        Method::DiscMetric,
        Method::Mcts,
        Method::Beam,
        Method::Bon,
        Method::TokenSplit,
        Method::LineSplit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Disc => "disc",
            Method::DiscMetric => "disc-metric",
            Method::Mcts => "mcts",
            Method::Beam => "beam",
            Method::Bon => "bon",
            Method::TokenSplit => "tokensplit",
            Method::LineSplit => "linesplit",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = DiscError;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| DiscError::Config(format!("unknown method {s:?}")))
    }
}

/// Everything a method needs besides the problem and backends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunSettings {
    pub search: SearchConfig,
    /// Step delimiters for the line-split baseline.
    pub line_delimiters: Vec<String>,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings { search: SearchConfig::default(), line_delimiters: vec!["\n".into()] }
    }
}

pub fn run_method(
    method: Method,
    problem: &Problem,
    policy: &dyn GenerationPolicy,
    reward: &dyn RewardModel,
    settings: &RunSettings,
) -> Result<Decomposition> {
    let engine = &settings.search.engine;
    match method {
        Method::Disc => greedy_disc(problem, policy, reward, engine),
        Method::DiscMetric => metric_split_decomposition(problem, policy, reward, engine),
        Method::Mcts => mcts_disc(problem, policy, reward, &settings.search),
        Method::Beam => beam_disc(problem, policy, reward, &settings.search),
        Method::Bon => best_of_n(problem, policy, reward, engine.budget_samples, engine),
        Method::TokenSplit => static_split_search(problem, policy, reward, BaselineKind::TokenSplit, engine),
        Method::LineSplit => step_search_with_lines(problem, policy, reward, engine, &settings.line_delimiters),
    }
}

/// Runs a method and packages the result as a run log. Backend failures are
/// recorded in the log rather than returned.
pub fn run_logged(
    method: Method,
    problem: &Problem,
    policy: &dyn GenerationPolicy,
    reward: &dyn RewardModel,
    settings: &RunSettings,
) -> RunLog {
    let engine = &settings.search.engine;
    let header = RunHeader {
        problem_id: problem.id.clone(),
        method: method.name().to_string(),
        config: serde_json::to_value(settings).expect("settings serialize"),
        seed: engine.rng_seed,
        budget_samples: engine.budget_samples,
        budget_tokens: engine.budget_tokens,
    };
    match run_method(method, problem, policy, reward, settings) {
        Ok(d) => RunLog::from_decomposition(header, &d),
        Err(e) => {
            log::warn!("{} on {}: {e}", method, problem.id);
            RunLog::failed(header, e.to_string())
        }
    }
}
