//! Greedy decomposition on a planted-solution problem, printing every
//! accept/reject decision and the committed steps.
//!
//! cargo run --example greedy_planted -- [seed]

use disc::backends::{PlantedReward, PlantedScoring, PlantedTreePolicy};
use disc::engine::{greedy_disc, EngineConfig};
use disc::problem::Problem;
use disc::seq::TextSeq;

fn main() -> disc::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(7);
    let planted = "abcabcbaccab";
    let policy = PlantedTreePolicy::uniform("Q:", "abc", planted, seed)?;
    let reward = PlantedReward::new(planted, PlantedScoring::Hamming);
    let problem = Problem::new("planted", TextSeq::chars("Q:"), None)?;
    let cfg = EngineConfig { budget_samples: 300, rng_seed: seed, ..EngineConfig::default() };

    let d = greedy_disc(&problem, &policy, &reward, &cfg)?;
    println!("{:>5} {:>5} {:>7} {:>8} {:>8} {:>8}  decision", "base", "head", "alpha", "z base", "z cand", "max");
    for r in &d.rounds {
        println!(
            "{:>5} {:>5} {:>7.4} {:>8.3} {:>8.3} {:>8.3}  {}",
            r.base_units,
            r.proposal_units,
            r.alpha,
            r.base_z.value(),
            r.cand_z.value(),
            r.cand_max,
            if r.accepted { "accept" } else { "reject" }
        );
    }
    println!();
    for (i, s) in d.steps.iter().enumerate() {
        println!("step {i}: {:?} ({:?}, z {:.3}, {} samples)", s.step_str.as_str(), s.kind, s.metric.value(), s.samples_spent);
    }
    let best = d.best.expect("at least one sample");
    println!("\nbest {:?} reward {:.3} after {} samples; solved: {}", best.solution().as_str(), best.reward, d.generated_solutions.len(), d.solved);
    Ok(())
}
