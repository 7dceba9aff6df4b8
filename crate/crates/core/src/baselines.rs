//! Static decomposition baselines: best-of-n (one step), token-level steps,
//! and line-level steps.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::engine::{finish, step_search, EngineConfig, Sampler, StepProposer};
use crate::error::{DiscError, Result};
use crate::policy::{GenerationPolicy, RewardModel};
use crate::problem::Problem;
use crate::record::{Decomposition, StepKind, StepRecord};
use crate::seq::{split_units, TextSeq};
use crate::stats::{SampleSource, ZScore};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineKind {
    BoN,
    TokenSplit,
    LineSplit,
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BaselineKind::BoN => "bon",
            BaselineKind::TokenSplit => "tokensplit",
            BaselineKind::LineSplit => "linesplit",
        })
    }
}

impl FromStr for BaselineKind {
    type Err = DiscError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bon" => Ok(BaselineKind::BoN),
            "tokensplit" => Ok(BaselineKind::TokenSplit),
            "linesplit" => Ok(BaselineKind::LineSplit),
            _ => Err(DiscError::Config(format!("unknown baseline {s:?}"))),
        }
    }
}

/// Draws up to `n` complete solutions from the prompt and keeps the best
/// (earliest on ties). In inference mode it stops at the first correct one.
/// The decomposition has a single step: the best solution's response.
pub fn best_of_n(
    problem: &Problem,
    policy: &dyn GenerationPolicy,
    reward: &dyn RewardModel,
    n: usize,
    cfg: &EngineConfig,
) -> Result<Decomposition> {
    if n == 0 {
        return Err(DiscError::Config("best-of-n needs n >= 1".into()));
    }
    let cfg = EngineConfig { budget_samples: n, ..cfg.clone() };
    cfg.validate()?;
    let mut sampler = Sampler::new(problem, policy, reward, &cfg);
    while sampler.remaining() > 0 {
        let s = sampler.draw(&problem.prompt)?;
        if cfg.inference_mode && s.is_correct() {
            break;
        }
    }
    let mut decomp = finish(Decomposition::new(problem.prompt.clone()), sampler);
    if let Some(best) = &decomp.best {
        decomp.steps.push(StepRecord {
            step_str: best.suffix.clone(),
            metric: ZScore::SENTINEL,
            samples_spent: decomp.generated_solutions.len(),
            committed_at: decomp.generated_solutions.len(),
            kind: if best.is_correct() { StepKind::Solved } else { StepKind::Terminal },
        });
    }
    Ok(decomp)
}

/// Fixed-size proposals: the first unit of the best suffix.
#[derive(Debug, Clone, Default)]
pub struct TokenProposer {
    last_fraction: f64,
}

impl StepProposer for TokenProposer {
    fn propose(&mut self, suffix: &TextSeq) -> Option<(TextSeq, TextSeq)> {
        let parts = split_units(suffix, 1).into_parts()?;
        self.last_fraction = 1.0 / suffix.unit_count() as f64;
        Some(parts)
    }
    fn alpha(&self) -> f64 {
        self.last_fraction
    }
    fn on_accept(&mut self) {}
    fn on_reject(&mut self) {}
}

/// Proposes the first delimiter-terminated segment of the best suffix. A
/// suffix with no delimiter before its end is atomic.
#[derive(Debug, Clone)]
pub struct LineProposer {
    delimiters: Vec<String>,
    last_fraction: f64,
}

impl Default for LineProposer {
    fn default() -> Self {
        LineProposer::new(["\n"])
    }
}

impl LineProposer {
    pub fn new<S: Into<String>>(delimiters: impl IntoIterator<Item = S>) -> Self {
        let delimiters: Vec<String> = delimiters.into_iter().map(Into::into).filter(|d: &String| !d.is_empty()).collect();
        LineProposer { delimiters, last_fraction: 0.0 }
    }

    /// Byte length of the first segment, delimiter included.
    pub fn segment_len(&self, text: &str) -> Option<usize> {
        self.delimiters
            .iter()
            .filter_map(|d| text.find(d.as_str()).map(|i| i + d.len()))
            .min()
    }
}

impl StepProposer for LineProposer {
    fn propose(&mut self, suffix: &TextSeq) -> Option<(TextSeq, TextSeq)> {
        let text = suffix.as_str();
        let cut = self.segment_len(text).filter(|&c| c < text.len())?;
        self.last_fraction = cut as f64 / text.len() as f64;
        Some((TextSeq::new(&text[..cut], suffix.scheme), TextSeq::new(&text[cut..], suffix.scheme)))
    }
    fn alpha(&self) -> f64 {
        self.last_fraction
    }
    fn on_accept(&mut self) {}
    fn on_reject(&mut self) {}
}

/// The greedy accept/commit loop with a fixed step rule. Rejected candidates
/// are resampled at the same step.
pub fn static_split_search(
    problem: &Problem,
    policy: &dyn GenerationPolicy,
    reward: &dyn RewardModel,
    kind: BaselineKind,
    cfg: &EngineConfig,
) -> Result<Decomposition> {
    match kind {
        BaselineKind::TokenSplit => step_search(problem, policy, reward, cfg, &mut TokenProposer::default()),
        BaselineKind::LineSplit => step_search(problem, policy, reward, cfg, &mut LineProposer::default()),
        BaselineKind::BoN => Err(DiscError::Config("best-of-n is not a split search".into())),
    }
}

/// Line-split search with custom delimiters.
pub fn step_search_with_lines(
    problem: &Problem,
    policy: &dyn GenerationPolicy,
    reward: &dyn RewardModel,
    cfg: &EngineConfig,
    delimiters: &[String],
) -> Result<Decomposition> {
    step_search(problem, policy, reward, cfg, &mut LineProposer::new(delimiters.iter().cloned()))
}

/// Runs any baseline; best-of-n uses the sample budget as `n`.
pub fn run_baseline(
    problem: &Problem,
    policy: &dyn GenerationPolicy,
    reward: &dyn RewardModel,
    kind: BaselineKind,
    cfg: &EngineConfig,
) -> Result<Decomposition> {
    match kind {
        BaselineKind::BoN => best_of_n(problem, policy, reward, cfg.budget_samples, cfg),
        _ => static_split_search(problem, policy, reward, kind, cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::scripted::{FnPolicy, LastNumberReward, ScriptedPolicy};
    use crate::policy::PolicyParams;

    fn problem() -> Problem {
        Problem::new("p", TextSeq::chars("Q:"), None).unwrap()
    }

    #[test]
    fn bon_picks_earliest_max() {
        let pol = ScriptedPolicy::new(["0.2", "0.9", "0.9"]);
        let d = best_of_n(&problem(), &pol, &LastNumberReward::default(), 3, &EngineConfig::default()).unwrap();
        assert_eq!(d.best.unwrap().index, 1);
        assert_eq!(d.generated_solutions.len(), 3);
        assert!(d.generated_solutions.iter().all(|s| s.prefix.as_str() == "Q:"));
    }

    #[test]
    fn bon_single_and_early_stop() {
        let pol = ScriptedPolicy::new(["0.3"]);
        let d = best_of_n(&problem(), &pol, &LastNumberReward::default(), 1, &EngineConfig::default()).unwrap();
        assert_eq!(d.best.unwrap().reward, 0.3);

        let pol = ScriptedPolicy::new(["0.1", "1", "0.5"]);
        let d = best_of_n(&problem(), &pol, &LastNumberReward::default(), 3, &EngineConfig::default()).unwrap();
        assert_eq!(d.generated_solutions.len(), 2);
        assert!(d.solved);
        assert!(best_of_n(&problem(), &pol, &LastNumberReward::default(), 0, &EngineConfig::default()).is_err());
    }

    #[test]
    fn proposers() {
        let mut line = LineProposer::default();
        let (h, t) = line.propose(&TextSeq::chars("a\nb\nc")).unwrap();
        assert_eq!((h.as_str(), t.as_str()), ("a\n", "b\nc"));
        assert!(line.propose(&TextSeq::chars("abc")).is_none());
        assert!(line.propose(&TextSeq::chars("abc\n")).is_none());

        let mut dot = LineProposer::new(["\n", "."]);
        let (h, _) = dot.propose(&TextSeq::chars("x. y\nz")).unwrap();
        assert_eq!(h.as_str(), "x.");

        let mut tok = TokenProposer::default();
        let (h, t) = tok.propose(&TextSeq::chars("xyz")).unwrap();
        assert_eq!((h.as_str(), t.as_str()), ("x", "yz"));
        assert!(tok.propose(&TextSeq::chars("x")).is_none());
    }

    #[test]
    fn step_sizes_ignore_rewards() {
        // the same suffix yields the same proposal before and after rejections
        let mut line = LineProposer::default();
        let s = TextSeq::chars("l1\nl2\n");
        let first = line.propose(&s);
        line.on_reject();
        line.on_reject();
        assert_eq!(line.propose(&s), first);
    }

    #[test]
    fn linesplit_commits_lines() {
        // three-line solutions; reward is the number of lines equal to "1"
        let pol = FnPolicy(|prefix: &TextSeq, params: &PolicyParams| {
            let have = prefix.as_str().matches('\n').count();
            let seed = params.seed.unwrap_or(0);
            Ok((have..3).map(|i| if (seed >> i) & 1 == 1 { "1\n" } else { "0\n" }).collect::<String>())
        });
        let lines = |p: &Problem, s: &TextSeq| -> f64 {
            p.response(s).lines().filter(|l| *l == "1").count() as f64 / 3.0
        };
        struct Lines<F>(F);
        impl<F: Fn(&Problem, &TextSeq) -> f64 + Send + Sync> RewardModel for Lines<F> {
            fn score(&self, p: &Problem, s: &TextSeq) -> Result<f64> {
                Ok((self.0)(p, s))
            }
        }
        let cfg = EngineConfig { budget_samples: 50, rng_seed: 4, ..Default::default() };
        let d = static_split_search(&problem(), &pol, &Lines(lines), BaselineKind::LineSplit, &cfg).unwrap();
        for step in &d.steps {
            if step.kind == StepKind::Accepted {
                assert_eq!(step.step_str.as_str().matches('\n').count(), 1);
                assert!(step.step_str.as_str().ends_with('\n'));
            }
        }
        assert!(d.generated_solutions.iter().all(|s| s.solution().as_str().matches('\n').count() == 3));
    }
}
