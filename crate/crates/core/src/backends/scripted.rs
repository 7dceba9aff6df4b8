//! Deterministic and instrumented policies for tests, examples, and
//! measurement runs.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use crate::backends::verifier::extract_last_number;
use crate::error::{DiscError, Result};
use crate::policy::{Generation, GenerationPolicy, PolicyParams, RewardModel};
use crate::problem::Problem;
use crate::seq::TextSeq;

/// Policy backed by a closure of `(prefix, params)`. Token usage is the unit
/// count of the returned suffix.
pub struct FnPolicy<F>(pub F);

impl<F> GenerationPolicy for FnPolicy<F>
where
    F: Fn(&TextSeq, &PolicyParams) -> Result<String> + Send + Sync,
{
    fn sample(&self, prefix: &TextSeq, params: &PolicyParams) -> Result<Generation> {
        let start = Instant::now();
        let suffix = TextSeq::new((self.0)(prefix, params)?, prefix.scheme);
        Ok(Generation { tokens: suffix.unit_count(), suffix, gen_time: start.elapsed() })
    }
}

/// Returns the scripted suffixes in call order and fails once they run out.
pub struct ScriptedPolicy {
    suffixes: Vec<String>,
    next: AtomicUsize,
}

impl ScriptedPolicy {
    pub fn new<S: Into<String>>(suffixes: impl IntoIterator<Item = S>) -> Self {
        ScriptedPolicy { suffixes: suffixes.into_iter().map(Into::into).collect(), next: AtomicUsize::new(0) }
    }
}

impl GenerationPolicy for ScriptedPolicy {
    fn sample(&self, prefix: &TextSeq, _params: &PolicyParams) -> Result<Generation> {
        let i = self.next.fetch_add(1, Ordering::SeqCst);
        let text = self
            .suffixes
            .get(i)
            .ok_or_else(|| DiscError::Backend(format!("script exhausted after {} draws", self.suffixes.len())))?;
        let suffix = TextSeq::new(text.clone(), prefix.scheme);
        Ok(Generation { tokens: suffix.unit_count(), suffix, gen_time: Duration::ZERO })
    }

    fn serial_only(&self) -> bool {
        true
    }
}

/// Adds a fixed sleep to every call of the inner policy and reports it as
/// generation time.
pub struct FixedLatency<P> {
    pub inner: P,
    pub latency: Duration,
}

impl<P: GenerationPolicy> GenerationPolicy for FixedLatency<P> {
    fn sample(&self, prefix: &TextSeq, params: &PolicyParams) -> Result<Generation> {
        let start = Instant::now();
        std::thread::sleep(self.latency);
        let mut g = self.inner.sample(prefix, params)?;
        g.gen_time = start.elapsed();
        Ok(g)
    }

    fn serial_only(&self) -> bool {
        self.inner.serial_only()
    }
}

/// Counts calls into the inner policy.
pub struct CountingPolicy<P> {
    pub inner: P,
    calls: AtomicUsize,
}

impl<P> CountingPolicy<P> {
    pub fn new(inner: P) -> Self {
        CountingPolicy { inner, calls: AtomicUsize::new(0) }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl<P: GenerationPolicy> GenerationPolicy for CountingPolicy<P> {
    fn sample(&self, prefix: &TextSeq, params: &PolicyParams) -> Result<Generation> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.sample(prefix, params)
    }

    fn serial_only(&self) -> bool {
        self.inner.serial_only()
    }
}

/// Reward = last number in the response, or `missing` if there is none.
#[derive(Debug, Clone, Copy)]
pub struct LastNumberReward {
    pub missing: f64,
}

impl Default for LastNumberReward {
    fn default() -> Self {
        LastNumberReward { missing: 0.0 }
    }
}

impl RewardModel for LastNumberReward {
    fn score(&self, problem: &Problem, solution: &TextSeq) -> Result<f64> {
        Ok(extract_last_number(problem.response(solution)).unwrap_or(self.missing))
    }
}
