use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde_json::json;

use disc::backends::SyntheticSuite;
use disc::harness::{
    best_within, bootstrap_mean_ci, paired_t_test, pass_at_k, pass_at_token, reward_histogram, run_synth_logs,
    synth_report, Method, RunHeader, RunLog, RunSummary, SynthBenchConfig,
};
use disc::record::{SampleRecord, StepKind, StepRecord};
use disc::seq::TextSeq;
use disc::stats::ZScore;

fn log_from(rewards: &[(f64, usize)], steps: usize) -> RunLog {
    let mut log = RunLog::new(RunHeader {
        problem_id: "p".into(),
        method: "disc".into(),
        config: json!({"alpha0": 0.15}),
        seed: 1,
        budget_samples: 100,
        budget_tokens: None,
    });
    for (i, &(r, t)) in rewards.iter().enumerate() {
        log.samples.push(SampleRecord {
            index: i,
            prefix: TextSeq::chars("Q:"),
            suffix: TextSeq::chars("x\n\"y\""),
            reward: r,
            tokens: t,
            gen_secs: 0.001 * i as f64,
            overhead_secs: 1e-7,
            depth: i % 3,
        });
    }
    for k in 0..steps {
        log.steps.push(StepRecord {
            step_str: TextSeq::chars("s"),
            metric: if k == 0 { ZScore::SENTINEL } else { ZScore(1.0 / k as f64) },
            samples_spent: 1,
            committed_at: k + 1,
            kind: StepKind::Accepted,
        });
    }
    log.summary = Some(RunSummary {
        solved: rewards.iter().any(|&(r, _)| r >= 1.0),
        best_index: None,
        samples_consumed: rewards.len(),
        tokens_consumed: rewards.iter().map(|&(_, t)| t).sum(),
        error: None,
    });
    log
}

fn logs() -> impl Strategy<Value = Vec<RunLog>> {
    let reward = prop_oneof![3 => 0.0f64..1.0, 1 => Just(1.0)];
    prop::collection::vec((prop::collection::vec((reward, 1usize..20), 0..25), 0usize..5), 1..15)
        .prop_map(|v| v.into_iter().map(|(rs, s)| log_from(&rs, s)).collect())
}

proptest! {
    #[test]
    fn pass_curves_are_monotone(logs in logs(), budgets in prop::collection::vec(0usize..300, 1..10)) {
        for curve in [pass_at_k(&logs, &budgets), pass_at_token(&logs, &budgets)] {
            prop_assert!(curve.points.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 <= w[1].1));
            prop_assert!(curve.points.iter().all(|&(_, v)| (0.0..=1.0).contains(&v)));
        }
    }

    #[test]
    fn curves_ignore_log_order(mut logs in logs(), seed in any::<u64>()) {
        let ks: Vec<usize> = (1..30).collect();
        let tb: Vec<usize> = (0..20).map(|i| i * 15).collect();
        let before = (pass_at_k(&logs, &ks), pass_at_token(&logs, &tb), disc::harness::partition_stats(&logs));
        use rand::seq::SliceRandom;
        logs.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let after = (pass_at_k(&logs, &ks), pass_at_token(&logs, &tb), disc::harness::partition_stats(&logs));
        prop_assert_eq!(before.0, after.0);
        prop_assert_eq!(before.1, after.1);
        prop_assert_eq!(before.2.histogram, after.2.histogram);
    }

    #[test]
    fn jsonl_round_trip_is_exact(logs in logs()) {
        for log in logs {
            let text = log.to_jsonl();
            prop_assert_eq!(RunLog::read_jsonl(text.as_bytes()).unwrap(), log);
        }
    }

    #[test]
    fn histogram_counts_everything(xs in prop::collection::vec(-10.0f64..10.0, 1..200), bins in 1usize..30) {
        let h = reward_histogram(&xs, bins);
        prop_assert_eq!(h.counts.iter().sum::<usize>(), xs.len());
        prop_assert_eq!(h.edges.len(), h.counts.len() + 1);
    }
}

#[test]
fn histogram_fits_a_normal_sample() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let normal = Normal::new(0.5, 0.1).unwrap();
    let xs: Vec<f64> = (0..10_000).map(|_| normal.sample(&mut rng)).collect();
    let h = reward_histogram(&xs, 40);
    assert!((h.mean - 0.5).abs() < 0.01, "{}", h.mean);
    assert!((h.std - 0.1).abs() < 0.01, "{}", h.std);
    let peak = h.counts.iter().enumerate().max_by_key(|(_, c)| **c).unwrap().0;
    let centre = 0.5 * (h.edges[peak] + h.edges[peak + 1]);
    assert!((centre - 0.5).abs() < 0.05, "mode bin at {centre}");
}

#[test]
fn synth_report_equals_a_rescan_of_its_logs() {
    let mut cfg = SynthBenchConfig::new(SyntheticSuite::Wiener, vec![Method::Disc, Method::Bon], 12, vec![1, 5, 20]);
    cfg.settings.search.engine.record_timings = false;
    cfg.settings.search.engine.fixed_round = Some(3);
    let logs = run_synth_logs(&cfg).unwrap();
    let report = synth_report(&cfg, &logs);
    assert_eq!(report.methods.len(), 2);
    for (mr, (method, runs)) in report.methods.iter().zip(&logs) {
        assert_eq!(mr.method, *method);
        assert_eq!(runs.len(), 12);
        for p in &mr.points {
            let bests: Vec<f64> = runs
                .iter()
                .map(|l| l.samples.iter().take(p.budget).map(|s| s.reward).fold(f64::NEG_INFINITY, f64::max))
                .collect();
            let mean = bests.iter().sum::<f64>() / bests.len() as f64;
            assert!((p.mean_best - mean).abs() < 1e-12);
            assert!(p.ci_low <= p.mean_best && p.mean_best <= p.ci_high);
            let solved = runs.iter().filter(|l| l.samples.iter().take(p.budget).any(|s| s.reward >= 1.0)).count();
            assert_eq!(p.solve_rate, solved as f64 / 12.0);
        }
    }
    let bon = &logs[1].1;
    let disc = &logs[0].1;
    // budget 1: the single rollout is the same draw for both methods
    for (a, b) in disc.iter().zip(bon) {
        assert_eq!(best_within(a, 1), best_within(b, 1));
    }
    let cmp = report.comparisons.iter().find(|c| c.budget == 20).unwrap();
    let a: Vec<f64> = disc.iter().map(|l| best_within(l, 20).unwrap()).collect();
    let b: Vec<f64> = bon.iter().map(|l| best_within(l, 20).unwrap()).collect();
    let t = paired_t_test(&a, &b).unwrap();
    assert_eq!(cmp.p_value, t.p_value);
    assert_eq!(cmp.n, 12);
}

#[test]
fn bootstrap_interval_is_reproducible() {
    let xs: Vec<f64> = (0..50).map(|i| (i as f64).sin()).collect();
    let a = bootstrap_mean_ci(&xs, 500, 0.95, 3);
    assert_eq!(a, bootstrap_mean_ci(&xs, 500, 0.95, 3));
    let mean = xs.iter().sum::<f64>() / 50.0;
    assert!(a.0 < mean && mean < a.1);
}
