//! The two interfaces every search engine consumes: a generation policy that
//! continues a prefix, and a reward model that scores complete solutions.

use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{DiscError, Result};
use crate::problem::Problem;
use crate::seq::TextSeq;

/// Rewards at or above this value count as a correct solution.
pub const CORRECT_REWARD: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub temperature: f64,
    pub max_units: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for PolicyParams {
    fn default() -> Self {
        PolicyParams { temperature: 0.2, max_units: 1024, seed: None }
    }
}

impl PolicyParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.temperature >= 0.0) {
            return Err(DiscError::Config(format!("temperature must be >= 0, got {}", self.temperature)));
        }
        if self.max_units == 0 {
            return Err(DiscError::Config("max_units must be >= 1".into()));
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        PolicyParams { seed: Some(seed), ..self.clone() }
    }
}

/// One continuation drawn from a policy.
#[derive(Debug, Clone, PartialEq)]
pub struct Generation {
    pub suffix: TextSeq,
    /// Generated (completion) tokens as reported by the backend.
    pub tokens: usize,
    pub gen_time: Duration,
}

pub trait GenerationPolicy: Send + Sync {
    /// Draws a suffix `s ~ pi(. | prefix)`. `prefix · suffix` must be a
    /// complete candidate solution.
    fn sample(&self, prefix: &TextSeq, params: &PolicyParams) -> Result<Generation>;

    /// Backends that cannot serve concurrent calls return true; callers then
    /// wrap them in [`SerialGate`].
    fn serial_only(&self) -> bool {
        false
    }
}

pub trait RewardModel: Send + Sync {
    /// Must be deterministic for a fixed `(problem, solution)` within a run.
    fn score(&self, problem: &Problem, solution: &TextSeq) -> Result<f64>;
}

impl<P: GenerationPolicy + ?Sized> GenerationPolicy for &P {
    fn sample(&self, prefix: &TextSeq, params: &PolicyParams) -> Result<Generation> {
        (**self).sample(prefix, params)
    }
    fn serial_only(&self) -> bool {
        (**self).serial_only()
    }
}

impl<P: GenerationPolicy + ?Sized> GenerationPolicy for Box<P> {
    fn sample(&self, prefix: &TextSeq, params: &PolicyParams) -> Result<Generation> {
        (**self).sample(prefix, params)
    }
    fn serial_only(&self) -> bool {
        (**self).serial_only()
    }
}

impl<P: GenerationPolicy + ?Sized> GenerationPolicy for std::sync::Arc<P> {
    fn sample(&self, prefix: &TextSeq, params: &PolicyParams) -> Result<Generation> {
        (**self).sample(prefix, params)
    }
    fn serial_only(&self) -> bool {
        (**self).serial_only()
    }
}

impl<R: RewardModel + ?Sized> RewardModel for &R {
    fn score(&self, problem: &Problem, solution: &TextSeq) -> Result<f64> {
        (**self).score(problem, solution)
    }
}

impl<R: RewardModel + ?Sized> RewardModel for Box<R> {
    fn score(&self, problem: &Problem, solution: &TextSeq) -> Result<f64> {
        (**self).score(problem, solution)
    }
}

impl<R: RewardModel + ?Sized> RewardModel for std::sync::Arc<R> {
    fn score(&self, problem: &Problem, solution: &TextSeq) -> Result<f64> {
        (**self).score(problem, solution)
    }
}

/// Serializes calls into a policy that is not safe to call concurrently.
pub struct SerialGate<P> {
    inner: P,
    lock: Mutex<()>,
}

impl<P> SerialGate<P> {
    pub fn new(inner: P) -> Self {
        SerialGate { inner, lock: Mutex::new(()) }
    }
}

impl<P: GenerationPolicy> GenerationPolicy for SerialGate<P> {
    fn sample(&self, prefix: &TextSeq, params: &PolicyParams) -> Result<Generation> {
        let _guard = self.lock.lock().unwrap_or_else(|e| e.into_inner());
        self.inner.sample(prefix, params)
    }
}

/// Reward model that always returns the same value.
#[derive(Debug, Clone, Copy)]
pub struct ConstantReward(pub f64);

impl RewardModel for ConstantReward {
    fn score(&self, _problem: &Problem, _solution: &TextSeq) -> Result<f64> {
        Ok(self.0)
    }
}
