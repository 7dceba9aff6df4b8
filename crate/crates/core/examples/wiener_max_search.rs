//! Max-search over Brownian paths: dynamic decomposition versus best-of-n at
//! a fixed trajectory budget.
//!
//! cargo run --release --example wiener_max_search -- [seeds] [budget]

use disc::backends::SyntheticSuite;
use disc::harness::{synth_bench, Method, SynthBenchConfig};

fn main() -> disc::Result<()> {
    let mut args = std::env::args().skip(1);
    let seeds: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(200);
    let budget: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(50);

    let mut cfg = SynthBenchConfig::new(SyntheticSuite::Wiener, vec![Method::Disc, Method::Bon], seeds, vec![10, 25, budget]);
    cfg.parallel = true;
    let report = synth_bench(&cfg)?;

    println!("{:<6} {:>6} {:>10} {:>22}", "method", "K", "mean best", "95% CI");
    for m in &report.methods {
        for p in &m.points {
            println!("{:<6} {:>6} {:>10.4} [{:>9.4}, {:>9.4}]", m.method, p.budget, p.mean_best, p.ci_low, p.ci_high);
        }
    }
    for c in &report.comparisons {
        println!("{} - {} at K={}: diff {:+.4}, t {:.2}, p {:.2e}", c.method, c.baseline, c.budget, c.mean_diff, c.t, c.p_value);
    }
    Ok(())
}
