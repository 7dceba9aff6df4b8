//! Search drivers built on dynamic step decomposition.
//!
//! [`greedy_disc`] advances a single base prefix: it proposes the first
//! `alpha` fraction of the best suffix seen so far as the next step, samples
//! from the candidate prefix, and commits the step when the acceptance
//! criterion prefers the candidate's reward distribution. Rejections contract
//! `alpha` geometrically so hard regions are searched in smaller steps.
//!
//! [`metric_split_decomposition`] is the generalized variant driven by a
//! priority metric: each round either opens a new step or re-splits the last
//! one, whichever carries the higher metric.

mod greedy;
mod metric;
mod sampler;

pub(crate) use greedy::finish;
pub use greedy::{greedy_disc, step_search, AlphaProposer, StepProposer};
pub use metric::metric_split_decomposition;
pub use sampler::{draw_seed, Sampler};

use serde::{Deserialize, Serialize};

/// Mixed into the run seed for the acceptance RNG (used by the random criterion).
pub(crate) const ACCEPT_RNG_SALT: u64 = 0xD15C_0000_0000_0001;

use crate::error::{DiscError, Result};
use crate::policy::PolicyParams;
use crate::stats::{AcceptanceCriterion, GuardInputs, PriorityMetric, StoppingRule};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub alpha0: f64,
    pub sigma: f64,
    pub budget_samples: usize,
    pub budget_tokens: Option<usize>,
    pub criterion: AcceptanceCriterion,
    /// Priority metric for the metric-split engine.
    pub metric: PriorityMetric,
    /// Metric stopping precision for the metric-split engine.
    pub theta: Option<f64>,
    /// Stop at the first sample with reward >= 1.
    pub inference_mode: bool,
    /// Replace the cumulative-reward rule with fixed-size rounds.
    pub fixed_round: Option<usize>,
    pub guard: GuardInputs,
    pub policy_params: PolicyParams,
    pub rng_seed: u64,
    /// Record wall-clock timings in sample records; zeros otherwise.
    pub record_timings: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            alpha0: 0.15,
            sigma: 1.0,
            budget_samples: 100,
            budget_tokens: None,
            criterion: AcceptanceCriterion::Z,
            metric: PriorityMetric::Z,
            theta: None,
            inference_mode: true,
            fixed_round: None,
            guard: GuardInputs::default(),
            policy_params: PolicyParams::default(),
            rng_seed: 0,
            record_timings: true,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha0 > 0.0 && self.alpha0 < 1.0) {
            return Err(DiscError::Config(format!("alpha0 must lie in (0, 1), got {}", self.alpha0)));
        }
        if !(self.sigma > 0.0) {
            return Err(DiscError::Config(format!("sigma must be positive, got {}", self.sigma)));
        }
        if self.budget_samples == 0 {
            return Err(DiscError::Config("budget_samples must be >= 1".into()));
        }
        if self.fixed_round == Some(0) {
            return Err(DiscError::Config("fixed_round must be >= 1".into()));
        }
        if self.theta.is_some_and(f64::is_nan) {
            return Err(DiscError::Config("theta must not be NaN".into()));
        }
        self.policy_params.validate()
    }

    pub fn stopping_rule(&self) -> StoppingRule {
        StoppingRule {
            sigma: self.sigma,
            fixed_round: self.fixed_round,
            stop_on_solve: self.inference_mode,
        }
    }
}
