//! Pass curves, per-step statistics, overhead and reward histograms from run
//! logs, recomputed after a round trip through JSONL files.
//!
//! cargo run --example analytics

use disc::backends::synthetic::{planted_instance, PlantedSuiteConfig};
use disc::harness::{
    load_dir, overhead_report, partition_stats, pass_at_k, pass_at_token, relative_error_reduction, reward_histogram,
    run_logged, Method, RunSettings,
};

fn main() -> disc::Result<()> {
    let dir = tempfile::tempdir()?;
    let suite = PlantedSuiteConfig { alphabet: "abc".into(), depth: 4, ..PlantedSuiteConfig::default() };
    for method in [Method::Disc, Method::Bon] {
        for seed in 0..40 {
            let inst = planted_instance(&suite, seed)?;
            let mut settings = RunSettings::default();
            settings.search.engine.budget_samples = 60;
            settings.search.engine.rng_seed = seed;
            let log = run_logged(method, &inst.problem, &*inst.policy, &*inst.reward, &settings);
            log.save(dir.path().join(method.name()).join(format!("{seed}.jsonl")))?;
        }
    }

    let disc = load_dir(dir.path().join("disc"))?;
    let bon = load_dir(dir.path().join("bon"))?;
    let ks = [1, 5, 10, 20, 40, 60];
    let (pd, pb) = (pass_at_k(&disc, &ks), pass_at_k(&bon, &ks));
    println!("{:>4} {:>7} {:>7} {:>10}", "k", "disc", "bon", "err. red.");
    for ((k, d), (_, b)) in pd.points.iter().zip(&pb.points) {
        let red = relative_error_reduction(*b, *d).map(|r| format!("{r:.3}")).unwrap_or_else(|| "-".into());
        println!("{k:>4} {d:>7.3} {b:>7.3} {red:>10}");
    }
    print!("\npass@token (disc)\n{}", pass_at_token(&disc, &[50, 100, 200]).to_csv());

    let ps = partition_stats(&disc);
    println!("\nsteps per run: {:?}", ps.histogram);
    for g in &ps.per_step {
        println!("step {}: {} samples, reward {:.3} +- {:.3}", g.step, g.samples, g.reward_mean, g.reward_std);
    }
    let o = overhead_report(&disc);
    println!("\ngeneration {:.1}% / overhead {:.1}%", 100.0 * o.generation_fraction, 100.0 * o.overhead_fraction);

    let rewards: Vec<f64> = bon.iter().flat_map(|l| l.samples.iter().map(|s| s.reward)).collect();
    let h = reward_histogram(&rewards, 8);
    println!("\nbest-of-n rewards: mean {:.3}, std {:.3}", h.mean, h.std);
    for (i, c) in h.counts.iter().enumerate() {
        println!("[{:.2}, {:.2}) {:>5} {}", h.edges[i], h.edges[i + 1], c, "#".repeat(c / 20));
    }
    Ok(())
}
