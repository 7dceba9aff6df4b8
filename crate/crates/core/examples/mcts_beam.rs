//! Tree search and beam search over dynamic-decomposition expansions,
//! compared with greedy on a batch of planted problems.
//!
//! cargo run --release --example mcts_beam -- [problems]

use disc::backends::synthetic::{planted_instance, PlantedSuiteConfig};
use disc::backends::PlantedScoring;
use disc::engine::{greedy_disc, EngineConfig};
use disc::search::{beam_disc, mcts_disc, mcts_tree, NodeKind, SearchConfig};

fn main() -> disc::Result<()> {
    let n: u64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(50);
    let suite = PlantedSuiteConfig { alphabet: "abc".into(), depth: 5, scoring: PlantedScoring::PrefixMatch };
    let mut solved = [0usize; 3];
    let mut samples = [0usize; 3];
    for seed in 0..n {
        let engine = EngineConfig { budget_samples: 150, rng_seed: seed, ..EngineConfig::default() };
        let search = SearchConfig { exploration_c: 0.5, beam_width: 2, engine: engine.clone(), ..SearchConfig::default() };
        let inst = planted_instance(&suite, seed)?;
        let runs = [
            greedy_disc(&inst.problem, &*inst.policy, &*inst.reward, &engine)?,
            mcts_disc(&inst.problem, &*inst.policy, &*inst.reward, &search)?,
            beam_disc(&inst.problem, &*inst.policy, &*inst.reward, &search)?,
        ];
        for (i, d) in runs.iter().enumerate() {
            solved[i] += d.solved as usize;
            samples[i] += d.generated_solutions.len();
        }
    }
    for (i, name) in ["greedy", "mcts", "beam"].iter().enumerate() {
        println!("{name:<7} solved {:>3}/{n}  mean samples {:.1}", solved[i], samples[i] as f64 / n as f64);
    }

    let inst = planted_instance(&suite, 0)?;
    let search = SearchConfig {
        engine: EngineConfig { budget_samples: 40, inference_mode: false, ..EngineConfig::default() },
        ..SearchConfig::default()
    };
    let (tree, target, _) = mcts_tree(&inst.problem, &*inst.policy, &*inst.reward, &search)?;
    println!("\ntree after 40 samples ({} nodes), internal nodes:", tree.nodes.len());
    for (id, node) in tree.nodes.iter().enumerate() {
        if node.kind != NodeKind::Leaf {
            let mark = if id == target { " <- target" } else { "" };
            println!(
                "{:indent$}{:?} {:?} q {:.3} n {} z {:.3}{mark}",
                "",
                node.kind,
                node.prefix.as_str(),
                node.q_hat,
                node.visits,
                node.z.value(),
                indent = 2 * node.depth
            );
        }
    }
    Ok(())
}
