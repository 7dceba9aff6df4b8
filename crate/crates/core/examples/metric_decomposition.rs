//! Metric-driven splitting with each priority metric on the same problem.
//!
//! cargo run --example metric_decomposition

use disc::backends::{PlantedReward, PlantedScoring, PlantedTreePolicy};
use disc::engine::{metric_split_decomposition, EngineConfig};
use disc::problem::Problem;
use disc::seq::TextSeq;
use disc::stats::PriorityMetric;

fn main() -> disc::Result<()> {
    let planted = "bacbbacabcab";
    let problem = Problem::new("planted", TextSeq::chars("Q:"), None)?;
    for metric in [PriorityMetric::Z, PriorityMetric::Q, PriorityMetric::NegZ, PriorityMetric::NegQ] {
        let policy = PlantedTreePolicy::uniform("Q:", "abc", planted, 3)?;
        let reward = PlantedReward::new(planted, PlantedScoring::PrefixMatch);
        let cfg = EngineConfig { metric, alpha0: 0.5, budget_samples: 200, rng_seed: 3, ..EngineConfig::default() };
        let d = metric_split_decomposition(&problem, &policy, &reward, &cfg)?;
        let steps: Vec<&str> = d.steps.iter().map(|s| s.step_str.as_str()).collect();
        println!(
            "{metric:?}: {} samples, solved {}, steps {:?}",
            d.generated_solutions.len(),
            d.solved,
            steps
        );
    }
    Ok(())
}
