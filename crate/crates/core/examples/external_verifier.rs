//! Scoring candidate programs by running them against unit tests in a
//! sandboxed temporary directory.
//!
//! cargo run --example external_verifier

use disc::backends::{score_with_verifier, ScriptedPolicy, TestCase, VerifierReward, VerifierSpec};
use disc::baselines::best_of_n;
use disc::engine::EngineConfig;
use disc::problem::Problem;
use disc::seq::TextSeq;

fn main() -> disc::Result<()> {
    // each candidate is a shell function body; a test feeds two numbers on
    // stdin and expects their sum
    let tests = [("2 3", "5"), ("10 -4", "6"), ("0 0", "0")]
        .into_iter()
        .map(|(i, o)| TestCase { stdin: Some(format!("{i}\n")), expected_stdout: Some(o.into()), file: None })
        .collect();
    let spec = VerifierSpec::ExternalCommand {
        command: vec!["sh".into(), "{solution}".into()],
        tests,
        timeout_ms: 2_000,
        solution_file: "add.sh".into(),
        workers: 3,
    };
    let problem = Problem::new("add", TextSeq::chars("#!/bin/sh\n"), Some(spec.clone()))?;

    let candidates = [
        "read a b; echo $((a - b))\n",
        "read a b; echo $a\n",
        "read a b; echo $((a + b))\n",
        "while :; do :; done\n",
    ];
    for c in candidates {
        let solution = problem.prompt.concat(&TextSeq::chars(c));
        println!("{:.3}  {}", score_with_verifier(&spec, &problem, &solution)?, c.trim_end());
    }

    let policy = ScriptedPolicy::new(candidates);
    let cfg = EngineConfig { budget_samples: 4, ..EngineConfig::default() };
    let d = best_of_n(&problem, &policy, &VerifierReward, 4, &cfg)?;
    println!("best-of-n stopped after {} candidates, solved: {}", d.generated_solutions.len(), d.solved);
    Ok(())
}
