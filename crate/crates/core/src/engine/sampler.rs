use std::time::{Duration, Instant};

use crate::engine::EngineConfig;
use crate::error::Result;
use crate::policy::{GenerationPolicy, PolicyParams, RewardModel};
use crate::problem::Problem;
use crate::record::SampleRecord;
use crate::seq::TextSeq;
use crate::stats::SampleSource;

/// Per-draw seed derived from the run seed and the global draw index
/// (splitmix64 finalizer).
pub fn draw_seed(run_seed: u64, index: usize) -> u64 {
    let mut z = run_seed ^ (index as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Draws scored rollouts for one problem under a sample/token budget and
/// keeps every draw in order.
pub struct Sampler<'a> {
    problem: &'a Problem,
    policy: &'a dyn GenerationPolicy,
    reward: &'a dyn RewardModel,
    params: PolicyParams,
    run_seed: u64,
    budget_samples: usize,
    budget_tokens: Option<usize>,
    record_timings: bool,
    tokens: usize,
    last_mark: Instant,
    generated: Vec<SampleRecord>,
    /// Committed-step depth stamped on new records.
    pub depth: usize,
}

impl<'a> Sampler<'a> {
    pub fn new(
        problem: &'a Problem,
        policy: &'a dyn GenerationPolicy,
        reward: &'a dyn RewardModel,
        cfg: &EngineConfig,
    ) -> Self {
        Sampler {
            problem,
            policy,
            reward,
            params: cfg.policy_params.clone(),
            run_seed: cfg.rng_seed,
            budget_samples: cfg.budget_samples,
            budget_tokens: cfg.budget_tokens,
            record_timings: cfg.record_timings,
            tokens: 0,
            last_mark: Instant::now(),
            generated: Vec::new(),
            depth: 0,
        }
    }

    pub fn problem(&self) -> &Problem {
        self.problem
    }

    pub fn drawn(&self) -> usize {
        self.generated.len()
    }

    pub fn tokens(&self) -> usize {
        self.tokens
    }

    pub fn generated(&self) -> &[SampleRecord] {
        &self.generated
    }

    pub fn into_generated(self) -> Vec<SampleRecord> {
        self.generated
    }
}

impl SampleSource for Sampler<'_> {
    fn remaining(&self) -> usize {
        if self.budget_tokens.is_some_and(|b| self.tokens >= b) {
            return 0;
        }
        self.budget_samples.saturating_sub(self.generated.len())
    }

    fn draw(&mut self, prefix: &TextSeq) -> Result<SampleRecord> {
        let index = self.generated.len();
        let params = self.params.with_seed(draw_seed(self.run_seed, index));
        let generation = self.policy.sample(prefix, &params)?;
        let solution = prefix.concat(&generation.suffix);
        let reward = self.reward.score(self.problem, &solution)?;
        let now = Instant::now();
        let wall = now.duration_since(self.last_mark);
        self.last_mark = now;
        let (gen, overhead) = if self.record_timings {
            (generation.gen_time, wall.saturating_sub(generation.gen_time))
        } else {
            (Duration::ZERO, Duration::ZERO)
        };
        self.tokens += generation.tokens;
        let rec = SampleRecord {
            index,
            prefix: prefix.clone(),
            suffix: generation.suffix,
            reward,
            tokens: generation.tokens,
            gen_secs: gen.as_secs_f64(),
            overhead_secs: overhead.as_secs_f64(),
            depth: self.depth,
        };
        self.generated.push(rec.clone());
        Ok(rec)
    }
}
