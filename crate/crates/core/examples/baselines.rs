//! Best-of-n and the fixed-step baselines next to dynamic decomposition on a
//! text problem with line structure.
//!
//! cargo run --example baselines

use disc::backends::FnPolicy;
use disc::baselines::{best_of_n, run_baseline, step_search_with_lines, BaselineKind};
use disc::engine::{greedy_disc, EngineConfig};
use disc::policy::{PolicyParams, RewardModel};
use disc::problem::Problem;
use disc::seq::TextSeq;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Four lines of four words; the reward is the fraction of words equal to
/// "yes", with all sixteen counted as correct.
struct YesCount;

impl RewardModel for YesCount {
    fn score(&self, problem: &Problem, solution: &TextSeq) -> disc::Result<f64> {
        let words: Vec<&str> = problem.response(solution).split_whitespace().collect();
        Ok(words.iter().filter(|w| **w == "yes").count() as f64 / 16.0)
    }
}

fn main() -> disc::Result<()> {
    // each word is "yes" with probability 0.8
    let policy = FnPolicy(|prefix: &TextSeq, params: &PolicyParams| {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed.unwrap_or(0));
        let have = prefix.as_str().split_whitespace().count() - 1;
        let mut out = String::new();
        for i in have..16 {
            out.push_str(if rng.random_bool(0.8) { "yes" } else { "no" });
            out.push(if i % 4 == 3 { '\n' } else { ' ' });
        }
        Ok(out)
    });
    let problem = Problem::new("yes", TextSeq::tokens("answer:\n"), None)?;
    let mut wins = [0usize; 4];
    let seeds = 40;
    for seed in 0..seeds {
        let cfg = EngineConfig { budget_samples: 30, rng_seed: seed, ..EngineConfig::default() };
        let runs = [
            greedy_disc(&problem, &policy, &YesCount, &cfg)?,
            best_of_n(&problem, &policy, &YesCount, cfg.budget_samples, &cfg)?,
            run_baseline(&problem, &policy, &YesCount, BaselineKind::TokenSplit, &cfg)?,
            step_search_with_lines(&problem, &policy, &YesCount, &cfg, &["\n".to_string()])?,
        ];
        for (i, d) in runs.iter().enumerate() {
            wins[i] += d.solved as usize;
        }
    }
    for (name, w) in ["disc", "bon", "tokensplit", "linesplit"].iter().zip(wins) {
        println!("{name:<10} solved {w}/{seeds} with 30 samples");
    }
    Ok(())
}
