//! Seeded instances of the synthetic suites used by benchmarks and tests.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::planted::{PlantedReward, PlantedScoring, PlantedTreePolicy};
use super::wiener::{WienerPolicy, WienerReward};
use crate::error::{DiscError, Result};
use crate::policy::{GenerationPolicy, RewardModel};
use crate::problem::Problem;
use crate::seq::TextSeq;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticSuite {
    Planted,
    Wiener,
}

impl fmt::Display for SyntheticSuite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SyntheticSuite::Planted => "planted",
            SyntheticSuite::Wiener => "wiener",
        })
    }
}

impl FromStr for SyntheticSuite {
    type Err = DiscError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "planted" => Ok(SyntheticSuite::Planted),
            "wiener" => Ok(SyntheticSuite::Wiener),
            _ => Err(DiscError::Config(format!("unknown suite {s:?} (expected planted or wiener)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlantedSuiteConfig {
    pub alphabet: String,
    pub depth: usize,
    pub scoring: PlantedScoring,
}

impl Default for PlantedSuiteConfig {
    /// Uniform over {a, b} with depth 4: one draw solves with probability 1/16.
    fn default() -> Self {
        PlantedSuiteConfig { alphabet: "ab".into(), depth: 4, scoring: PlantedScoring::PrefixMatch }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WienerSuiteConfig {
    pub horizon: f64,
    pub dt: f64,
}

impl Default for WienerSuiteConfig {
    fn default() -> Self {
        WienerSuiteConfig { horizon: 1.0, dt: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SuiteConfig {
    pub planted: PlantedSuiteConfig,
    pub wiener: WienerSuiteConfig,
}

/// One problem with its own policy and reward model.
#[derive(Clone)]
pub struct SyntheticInstance {
    pub problem: Problem,
    pub policy: Arc<dyn GenerationPolicy>,
    pub reward: Arc<dyn RewardModel>,
}

pub const PLANTED_PROMPT: &str = "Q:";
pub const WIENER_PROMPT: &str = "W ";

/// The planted string is drawn uniformly from the alphabet using `seed`.
pub fn planted_instance(cfg: &PlantedSuiteConfig, seed: u64) -> Result<SyntheticInstance> {
    let alphabet: Vec<char> = cfg.alphabet.chars().collect();
    if alphabet.is_empty() || cfg.depth == 0 {
        return Err(DiscError::Config("planted suite needs a non-empty alphabet and depth >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x504C_414E_5445_4400);
    let planted: String = (0..cfg.depth).map(|_| alphabet[rng.random_range(0..alphabet.len())]).collect();
    let policy = PlantedTreePolicy::uniform(PLANTED_PROMPT, &cfg.alphabet, &planted, seed)?;
    let problem = Problem::new(format!("planted-{seed}"), TextSeq::chars(PLANTED_PROMPT), None)?;
    Ok(SyntheticInstance {
        problem,
        policy: Arc::new(policy),
        reward: Arc::new(PlantedReward::new(planted, cfg.scoring)),
    })
}

pub fn wiener_instance(cfg: &WienerSuiteConfig, seed: u64) -> Result<SyntheticInstance> {
    let policy = WienerPolicy::new(WIENER_PROMPT, cfg.horizon, cfg.dt, seed)?;
    let problem = Problem::new(format!("wiener-{seed}"), policy.prompt(), None)?;
    Ok(SyntheticInstance { problem, policy: Arc::new(policy), reward: Arc::new(WienerReward) })
}

pub fn suite_instance(suite: SyntheticSuite, cfg: &SuiteConfig, seed: u64) -> Result<SyntheticInstance> {
    match suite {
        SyntheticSuite::Planted => planted_instance(&cfg.planted, seed),
        SyntheticSuite::Wiener => wiener_instance(&cfg.wiener, seed),
    }
}
