//! Wiener-process max-search testbed.
//!
//! A solution is a discretized Brownian path on `[0, T]` written as
//! `T / dt` fixed-precision increments, each followed by one space, under the
//! whitespace-token scheme. Splitting a path at fraction `alpha` therefore
//! restarts the walk at `t0 ~ alpha * T` from the recorded value `W(t0)`, and
//! the reward of a complete path is its final value `W(T)`.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::engine::draw_seed;
use crate::error::{DiscError, Result};
use crate::policy::{Generation, GenerationPolicy, PolicyParams, RewardModel};
use crate::problem::Problem;
use crate::seq::{TextSeq, UnitScheme};

/// Decimal places kept per increment.
pub const INCREMENT_PRECISION: usize = 6;

pub fn encode_increment(x: f64) -> String {
    format!("{:+.*} ", INCREMENT_PRECISION, x)
}

pub fn encode_path(increments: &[f64]) -> String {
    increments.iter().map(|&x| encode_increment(x)).collect()
}

pub fn decode_path(text: &str) -> Result<Vec<f64>> {
    text.split_whitespace()
        .map(|tok| {
            if !tok.starts_with(['+', '-']) {
                return Err(DiscError::InvalidTrajectory(format!("increment {tok:?} has no sign")));
            }
            tok.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| DiscError::InvalidTrajectory(format!("bad increment {tok:?}")))
        })
        .collect()
}

#[derive(Debug)]
pub struct WienerPolicy {
    prompt: String,
    horizon: f64,
    dt: f64,
    steps: usize,
    normal: Normal<f64>,
    seed: u64,
    counter: AtomicU64,
}

impl WienerPolicy {
    pub fn new(prompt: &str, horizon: f64, dt: f64, seed: u64) -> Result<Self> {
        if !(horizon > 0.0 && dt > 0.0 && dt <= horizon) {
            return Err(DiscError::Config(format!("need 0 < dt <= T, got T={horizon}, dt={dt}")));
        }
        let steps = (horizon / dt).round() as usize;
        Ok(WienerPolicy {
            prompt: prompt.to_string(),
            horizon,
            dt,
            steps,
            normal: Normal::new(0.0, dt.sqrt()).expect("dt > 0"),
            seed,
            counter: AtomicU64::new(0),
        })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn prompt(&self) -> TextSeq {
        TextSeq::new(self.prompt.clone(), UnitScheme::WhitespaceToken)
    }

    fn recorded<'a>(&self, prefix: &'a TextSeq) -> Result<Vec<f64>> {
        let rest = prefix
            .as_str()
            .strip_prefix(self.prompt.as_str())
            .ok_or_else(|| DiscError::InvalidTrajectory("prefix does not start with the prompt".into()))?;
        if !rest.is_empty() && !rest.ends_with(' ') {
            return Err(DiscError::InvalidTrajectory("prefix ends inside an increment".into()));
        }
        let incs = decode_path(rest)?;
        if incs.len() > self.steps {
            return Err(DiscError::InvalidTrajectory(format!(
                "prefix has {} increments, path has {}",
                incs.len(),
                self.steps
            )));
        }
        Ok(incs)
    }
}

impl GenerationPolicy for WienerPolicy {
    fn sample(&self, prefix: &TextSeq, params: &PolicyParams) -> Result<Generation> {
        let start = Instant::now();
        let have = self.recorded(prefix)?.len();
        let seed = params
            .seed
            .unwrap_or_else(|| draw_seed(self.seed, self.counter.fetch_add(1, Ordering::Relaxed) as usize));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let incs: Vec<f64> = (have..self.steps).map(|_| self.normal.sample(&mut rng)).collect();
        Ok(Generation {
            suffix: TextSeq::new(encode_path(&incs), UnitScheme::WhitespaceToken),
            tokens: incs.len(),
            gen_time: start.elapsed(),
        })
    }
}

/// Reward of a path: its final value `W(T)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct WienerReward;

impl RewardModel for WienerReward {
    fn score(&self, problem: &Problem, solution: &TextSeq) -> Result<f64> {
        Ok(decode_path(problem.response(solution))?.iter().sum())
    }
}
