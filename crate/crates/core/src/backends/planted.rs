//! A synthetic policy with a known optimal solution.
//!
//! Solutions are strings of exactly `depth` symbols drawn position by
//! position from per-position weights over a small alphabet. One string, the
//! planted solution, is correct; its per-draw probability from any prefix is
//! the product of the remaining per-position probabilities.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::engine::draw_seed;
use crate::error::{DiscError, Result};
use crate::policy::{Generation, GenerationPolicy, PolicyParams, RewardModel};
use crate::problem::Problem;
use crate::seq::TextSeq;

#[derive(Debug)]
pub struct PlantedTreePolicy {
    prompt: String,
    alphabet: Vec<char>,
    planted: Vec<char>,
    weights: Vec<Vec<f64>>,
    samplers: Vec<WeightedIndex<f64>>,
    seed: u64,
    counter: AtomicU64,
}

impl PlantedTreePolicy {
    /// Uniform over `alphabet` at every position.
    pub fn uniform(prompt: &str, alphabet: &str, planted: &str, seed: u64) -> Result<Self> {
        let k = alphabet.chars().count();
        let depth = planted.chars().count();
        Self::with_weights(prompt, alphabet, planted, vec![vec![1.0; k]; depth], seed)
    }

    /// `weights[i][j]` is the unnormalized probability of `alphabet[j]` at
    /// position `i`. The planted symbol must have positive weight everywhere.
    pub fn with_weights(
        prompt: &str,
        alphabet: &str,
        planted: &str,
        weights: Vec<Vec<f64>>,
        seed: u64,
    ) -> Result<Self> {
        let alphabet: Vec<char> = alphabet.chars().collect();
        let planted: Vec<char> = planted.chars().collect();
        if alphabet.is_empty() || planted.is_empty() {
            return Err(DiscError::Config("planted policy needs a non-empty alphabet and solution".into()));
        }
        if weights.len() != planted.len() {
            return Err(DiscError::Config("one weight vector per position is required".into()));
        }
        let mut samplers = Vec::with_capacity(weights.len());
        for (pos, (w, c)) in weights.iter().zip(&planted).enumerate() {
            let j = alphabet
                .iter()
                .position(|a| a == c)
                .ok_or_else(|| DiscError::Config(format!("planted symbol {c:?} is not in the alphabet")))?;
            if w.len() != alphabet.len() || !(w[j] > 0.0) {
                return Err(DiscError::Config(format!(
                    "position {pos}: weights must cover the alphabet and give the planted symbol positive mass"
                )));
            }
            samplers.push(WeightedIndex::new(w).map_err(|e| DiscError::Config(e.to_string()))?);
        }
        Ok(PlantedTreePolicy {
            prompt: prompt.to_string(),
            alphabet,
            planted,
            weights,
            samplers,
            seed,
            counter: AtomicU64::new(0),
        })
    }

    pub fn depth(&self) -> usize {
        self.planted.len()
    }

    pub fn planted(&self) -> String {
        self.planted.iter().collect()
    }

    pub fn prompt(&self) -> &str {
        &self.prompt
    }

    /// Exact probability that one draw from `prompt · planted[..len]`
    /// completes the planted solution.
    pub fn completion_probability(&self, len: usize) -> f64 {
        (len..self.depth())
            .map(|pos| {
                let w = &self.weights[pos];
                let j = self.alphabet.iter().position(|a| *a == self.planted[pos]).unwrap();
                w[j] / w.iter().sum::<f64>()
            })
            .product()
    }

    fn partial<'a>(&self, prefix: &'a TextSeq) -> Result<&'a str> {
        let rest = prefix.as_str().strip_prefix(self.prompt.as_str()).ok_or_else(|| {
            DiscError::Backend(format!("prefix {:?} does not start with the prompt", prefix.as_str()))
        })?;
        let mut n = 0;
        for c in rest.chars() {
            if !self.alphabet.contains(&c) {
                return Err(DiscError::Backend(format!("symbol {c:?} is outside the alphabet")));
            }
            n += 1;
        }
        if n > self.depth() {
            return Err(DiscError::Backend(format!("prefix has {n} symbols, depth is {}", self.depth())));
        }
        Ok(rest)
    }

    fn rng(&self, params: &PolicyParams) -> ChaCha8Rng {
        let seed = params
            .seed
            .unwrap_or_else(|| draw_seed(self.seed, self.counter.fetch_add(1, Ordering::Relaxed) as usize));
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn extend<R: Rng>(&self, from: usize, rng: &mut R) -> String {
        (from..self.depth())
            .map(|pos| self.alphabet[self.samplers[pos].sample(rng)])
            .collect()
    }
}

impl GenerationPolicy for PlantedTreePolicy {
    /// Temperature is ignored; the per-position weights are the distribution.
    fn sample(&self, prefix: &TextSeq, params: &PolicyParams) -> Result<Generation> {
        let start = Instant::now();
        let have = self.partial(prefix)?.chars().count();
        let suffix = self.extend(have, &mut self.rng(params));
        Ok(Generation {
            tokens: self.depth() - have,
            suffix: TextSeq::new(suffix, prefix.scheme),
            gen_time: start.elapsed(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlantedScoring {
    /// 1 for the planted solution, 0 otherwise.
    Exact,
    /// Length of the common prefix with the planted solution over its length.
    #[default]
    PrefixMatch,
    /// Fraction of positions that agree with the planted solution.
    Hamming,
}

#[derive(Debug, Clone)]
pub struct PlantedReward {
    pub target: String,
    pub scoring: PlantedScoring,
}

impl PlantedReward {
    pub fn new(target: impl Into<String>, scoring: PlantedScoring) -> Self {
        PlantedReward { target: target.into(), scoring }
    }
}

impl RewardModel for PlantedReward {
    fn score(&self, problem: &Problem, solution: &TextSeq) -> Result<f64> {
        let response = problem.response(solution);
        let depth = self.target.chars().count().max(1) as f64;
        let matched = match self.scoring {
            PlantedScoring::Exact => return Ok(if response == self.target { 1.0 } else { 0.0 }),
            PlantedScoring::PrefixMatch => response
                .chars()
                .zip(self.target.chars())
                .take_while(|(a, b)| a == b)
                .count(),
            PlantedScoring::Hamming => response.chars().zip(self.target.chars()).filter(|(a, b)| a == b).count(),
        };
        if response == self.target {
            Ok(1.0)
        } else {
            // only the exact target reaches 1
            Ok((matched as f64 / depth).min(1.0 - 1.0 / (2.0 * depth)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn problem() -> Problem {
        Problem::new("p", TextSeq::chars("Q:"), None).unwrap()
    }

    #[test]
    fn full_prefix_gives_empty_suffix() {
        let pol = PlantedTreePolicy::uniform("Q:", "ab", "ab", 1).unwrap();
        let g = pol.sample(&TextSeq::chars("Q:ab"), &PolicyParams::default()).unwrap();
        assert!(g.suffix.is_empty());
        assert_eq!(g.tokens, 0);
    }

    #[test]
    fn rejects_bad_prefixes() {
        let pol = PlantedTreePolicy::uniform("Q:", "ab", "ab", 1).unwrap();
        let p = PolicyParams::default();
        assert!(pol.sample(&TextSeq::chars("Q:abb"), &p).is_err());
        assert!(pol.sample(&TextSeq::chars("Q:c"), &p).is_err());
        assert!(pol.sample(&TextSeq::chars("X:"), &p).is_err());
        assert!(PlantedTreePolicy::uniform("Q:", "ab", "ac", 1).is_err());
    }

    #[test]
    fn deterministic_under_seed() {
        let pol = PlantedTreePolicy::uniform("Q:", "abcd", "abcdabcd", 1).unwrap();
        let p = PolicyParams::default().with_seed(42);
        let a = pol.sample(&TextSeq::chars("Q:"), &p).unwrap();
        let b = pol.sample(&TextSeq::chars("Q:"), &p).unwrap();
        assert_eq!(a.suffix, b.suffix);
    }

    #[test]
    fn uniform_depth_two_is_uniform_over_four_strings() {
        // chi-square with 3 degrees of freedom; 11.34 is the 0.01 upper quantile
        let pol = PlantedTreePolicy::uniform("Q:", "ab", "ab", 3).unwrap();
        let n = 10_000;
        let mut counts: HashMap<String, usize> = HashMap::new();
        for i in 0..n {
            let p = PolicyParams::default().with_seed(draw_seed(11, i));
            let g = pol.sample(&TextSeq::chars("Q:"), &p).unwrap();
            *counts.entry(g.suffix.text).or_default() += 1;
        }
        assert_eq!(counts.len(), 4);
        let expected = n as f64 / 4.0;
        let chi2: f64 = counts.values().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        assert!(chi2 < 11.34, "chi2 = {chi2}");
    }

    #[test]
    fn completion_probability_matches_monte_carlo() {
        let weights = vec![vec![1.0, 3.0], vec![2.0, 2.0], vec![3.0, 1.0]];
        let pol = PlantedTreePolicy::with_weights("Q:", "ab", "bab", weights, 5).unwrap();
        for (len, prefix) in [(0, "Q:"), (1, "Q:b"), (2, "Q:ba")] {
            let exact = pol.completion_probability(len);
            let n = 20_000;
            let hits = (0..n)
                .filter(|&i| {
                    let p = PolicyParams::default().with_seed(draw_seed(len as u64, i));
                    let g = pol.sample(&TextSeq::chars(prefix), &p).unwrap();
                    format!("{}{}", &prefix[2..], g.suffix) == "bab"
                })
                .count();
            let est = hits as f64 / n as f64;
            let tol = 4.0 * (exact * (1.0 - exact) / n as f64).sqrt();
            assert!((est - exact).abs() <= tol, "len {len}: {est} vs {exact}");
        }
    }

    #[test]
    fn planted_reward_modes() {
        let pb = problem();
        let exact = PlantedReward::new("abab", PlantedScoring::Exact);
        assert_eq!(exact.score(&pb, &TextSeq::chars("Q:abab")).unwrap(), 1.0);
        assert_eq!(exact.score(&pb, &TextSeq::chars("Q:abaa")).unwrap(), 0.0);

        let lcp = PlantedReward::new("abab", PlantedScoring::PrefixMatch);
        assert_eq!(lcp.score(&pb, &TextSeq::chars("Q:abba")).unwrap(), 0.5);
        assert_eq!(lcp.score(&pb, &TextSeq::chars("Q:abab")).unwrap(), 1.0);
        assert!(lcp.score(&pb, &TextSeq::chars("Q:abaa")).unwrap() < 1.0);

        let ham = PlantedReward::new("abab", PlantedScoring::Hamming);
        assert_eq!(ham.score(&pb, &TextSeq::chars("Q:bbbb")).unwrap(), 0.5);
    }
}
