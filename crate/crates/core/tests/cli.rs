use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;

use serde_json::json;

use disc::backends::stub_server::{StubReply, StubServer};
use disc::backends::synthetic::{planted_instance, PlantedSuiteConfig};
use disc::backends::{CountingPolicy, FnPolicy};
use disc::cli::{cell_path, compare_csv, compare_groups, run_cells, Cell, RunManifest};
use disc::harness::{Method, RunHeader, RunLog, RunSummary};
use disc::policy::{GenerationPolicy, PolicyParams};
use disc::record::SampleRecord;
use disc::seq::TextSeq;
use disc::DiscError;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_disc"))
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn jsonl_files(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    if let Ok(rd) = std::fs::read_dir(dir) {
        for e in rd {
            let p = e.unwrap().path();
            if p.is_dir() {
                out.extend(jsonl_files(&p));
            } else if p.extension().is_some_and(|x| x == "jsonl") {
                out.push(p);
            }
        }
    }
    out.sort();
    out
}

const SYNTH: &str = r#"
methods = ["disc", "bon"]
[engine]
budget_samples = 30
record_timings = false
[backend]
kind = "synthetic"
suite = "planted"
instances = 2
"#;

#[test]
fn run_writes_one_log_per_cell_and_refuses_to_clobber() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = write(tmp.path(), "m.toml", SYNTH);
    let out = tmp.path().join("out");
    let run = |extra: &[&str]| {
        bin().args(["run", "--manifest"]).arg(&manifest).arg("--out").arg(&out).args(extra).output().unwrap()
    };
    let first = run(&[]);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let files = jsonl_files(&out);
    assert_eq!(files.len(), 4);
    assert!(out.join("disc/planted-0.jsonl").exists());
    assert!(out.join("bon/planted-1.jsonl").exists());
    let before: Vec<Vec<u8>> = files.iter().map(|f| std::fs::read(f).unwrap()).collect();

    let again = run(&[]);
    assert_eq!(again.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&again.stderr).contains("--resume"));

    let resumed = run(&["--resume"]);
    assert!(resumed.status.success());
    assert!(String::from_utf8_lossy(&resumed.stderr).contains("4 skipped"));
    let after: Vec<Vec<u8>> = files.iter().map(|f| std::fs::read(f).unwrap()).collect();
    assert_eq!(before, after);
}

#[test]
fn flags_override_the_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = write(tmp.path(), "m.toml", SYNTH);
    let out = tmp.path().join("out");
    let code = disc::cli::main_with_args([
        "disc",
        "run",
        "--manifest",
        manifest.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--budget-samples",
        "7",
        "--alpha0",
        "0.4",
        "--criterion",
        "negq",
        "--method",
        "tokensplit",
        "--seed",
        "9",
    ]);
    assert_eq!(code, 0);
    let files = jsonl_files(&out);
    // instances are seeded from the global seed
    let names: Vec<String> = files.iter().map(|f| f.file_name().unwrap().to_string_lossy().into_owned()).collect();
    assert_eq!(names, ["planted-10.jsonl", "planted-9.jsonl"]);
    for f in files {
        let log = RunLog::load(&f).unwrap();
        assert_eq!(log.header.method, "tokensplit");
        assert_eq!(log.header.budget_samples, 7);
        assert!(log.samples.len() <= 7);
        let engine = &log.header.config["search"]["engine"];
        assert_eq!(engine["alpha0"], 0.4);
        assert_eq!(engine["criterion"], "negq");
    }
}

#[test]
fn empty_problem_set_exits_cleanly() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "problems.jsonl", "");
    let manifest = write(
        tmp.path(),
        "m.toml",
        r#"
problems = "problems.jsonl"
[backend]
kind = "http"
endpoint_url = "http://127.0.0.1:9/v1/completions"
"#,
    );
    let out = tmp.path().join("out");
    let o = bin().args(["run", "--manifest"]).arg(&manifest).arg("--out").arg(&out).output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(jsonl_files(&out).is_empty());
}

#[test]
fn configuration_errors_exit_nonzero_before_sampling() {
    let tmp = tempfile::tempdir().unwrap();
    write(
        tmp.path(),
        "problems.jsonl",
        r#"{"id": "p", "prompt": "x", "verifier": {"kind": "external_command", "command": ["/no/such/checker", "{solution}"], "tests": [{}]}}"#,
    );
    let cases = [
        ("unknown key", "sede = 3\n"),
        ("bad url", "problems = \"problems.jsonl\"\n[backend]\nkind = \"http\"\nendpoint_url = \"not a url\"\n"),
        ("missing verifier", "problems = \"problems.jsonl\"\n[backend]\nkind = \"http\"\nendpoint_url = \"http://127.0.0.1:9/\"\n"),
        ("no problems", "[backend]\nkind = \"http\"\n"),
        ("bad alpha", "[engine]\nalpha0 = 1.5\n"),
        ("zero parallel", "parallel = 0\n"),
    ];
    for (what, text) in cases {
        let manifest = write(tmp.path(), "m.toml", text);
        let out = tmp.path().join(format!("out-{}", what.replace(' ', "-")));
        let o = bin().args(["run", "--manifest"]).arg(&manifest).arg("--out").arg(&out).output().unwrap();
        assert_eq!(o.status.code(), Some(2), "{what}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(jsonl_files(&out).is_empty(), "{what}");
    }
    let o = bin().args(["run", "--criterion", "zz"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn rerun_after_completion_draws_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let inst = planted_instance(&PlantedSuiteConfig::default(), 3).unwrap();
    let counting = Arc::new(CountingPolicy::new(inst.policy.clone()));
    let policy: Arc<dyn GenerationPolicy> = counting.clone();
    let cells = vec![Cell { problem: inst.problem.clone(), policy, reward: inst.reward.clone() }];
    let m = RunManifest {
        out: tmp.path().join("out"),
        methods: vec![Method::Disc, Method::Mcts],
        ..RunManifest::default()
    };
    let first = run_cells(&cells, &m, false).unwrap();
    assert_eq!((first.written, first.skipped), (2, 0));
    let calls = counting.calls();
    assert!(calls > 0);
    let second = run_cells(&cells, &m, true).unwrap();
    assert_eq!((second.written, second.skipped), (0, 2));
    assert_eq!(counting.calls(), calls);
}

#[test]
fn failed_cells_are_recorded_and_retried_on_resume() {
    let tmp = tempfile::tempdir().unwrap();
    let inst = planted_instance(&PlantedSuiteConfig::default(), 3).unwrap();
    let broken: Arc<dyn GenerationPolicy> =
        Arc::new(FnPolicy(|_: &TextSeq, _: &PolicyParams| Err(DiscError::Backend("down".into()))));
    let m = RunManifest { out: tmp.path().join("out"), methods: vec![Method::Disc, Method::Bon], ..RunManifest::default() };
    let cells = vec![Cell { problem: inst.problem.clone(), policy: broken, reward: inst.reward.clone() }];
    let o = run_cells(&cells, &m, false).unwrap();
    assert_eq!((o.written, o.failed), (2, 2));
    let log = RunLog::load(cell_path(&m.out, Method::Disc, &inst.problem.id)).unwrap();
    assert!(log.summary.unwrap().error.unwrap().contains("down"));

    let cells = vec![Cell { problem: inst.problem.clone(), policy: inst.policy.clone(), reward: inst.reward.clone() }];
    let o = run_cells(&cells, &m, true).unwrap();
    assert_eq!((o.written, o.failed, o.skipped), (2, 0, 0));
}

#[test]
fn http_backend_end_to_end() {
    let server = StubServer::with_handler(|req| {
        let prompt = req["prompt"].as_str().unwrap_or("");
        let text = if prompt.ends_with("2+2=") { "4" } else { "5" };
        StubReply::json(200, json!({"choices": [{"text": text}], "usage": {"completion_tokens": 1}}))
    });
    let tmp = tempfile::tempdir().unwrap();
    write(
        tmp.path(),
        "problems.jsonl",
        concat!(
            r#"{"id": "add", "prompt": "2+2=", "verifier": {"kind": "numeric_match", "target": 4}}"#,
            "\n",
            r#"{"id": "sub", "prompt": "9-5=", "verifier": {"kind": "exact_match", "target": "4"}}"#,
            "\n"
        ),
    );
    let manifest = write(
        tmp.path(),
        "m.toml",
        &format!(
            "problems = \"problems.jsonl\"\nmethods = [\"bon\", \"disc\"]\nparallel = 2\n[engine]\nbudget_samples = 5\n[backend]\nkind = \"http\"\nendpoint_url = \"{}\"\nmax_in_flight = 1\n",
            server.url()
        ),
    );
    let out = tmp.path().join("out");
    let o = bin().args(["run", "--manifest"]).arg(&manifest).arg("--out").arg(&out).output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let add = RunLog::load(out.join("bon/add.jsonl")).unwrap();
    assert!(add.solved());
    assert_eq!(add.samples.len(), 1);
    let sub = RunLog::load(out.join("disc/sub.jsonl")).unwrap();
    assert!(!sub.solved());
    assert!(sub.summary.as_ref().unwrap().error.is_none());
    assert!(server.requests().iter().all(|r| r["max_tokens"] == 1024));
}

fn fixture_log(problem: &str, rewards: &[f64]) -> RunLog {
    let mut log = RunLog::new(RunHeader {
        problem_id: problem.into(),
        method: "m".into(),
        config: json!({}),
        seed: 0,
        budget_samples: rewards.len(),
        budget_tokens: None,
    });
    for (i, &r) in rewards.iter().enumerate() {
        log.samples.push(SampleRecord {
            index: i,
            prefix: TextSeq::chars("Q"),
            suffix: TextSeq::chars("ab"),
            reward: r,
            tokens: 2,
            gen_secs: 0.0,
            overhead_secs: 0.0,
            depth: 0,
        });
    }
    log.summary = Some(RunSummary {
        solved: rewards.iter().any(|&r| r >= 1.0),
        best_index: None,
        samples_consumed: rewards.len(),
        tokens_consumed: 2 * rewards.len(),
        error: None,
    });
    log
}

#[test]
fn compare_matches_hand_computed_table() {
    // base solves p1 at 2, p2 at 4, never p3
    // method solves p1 at 1, p2 at 2, p3 at 3
    let base = vec![
        fixture_log("p1", &[0.0, 1.0, 0.0, 0.0]),
        fixture_log("p2", &[0.0, 0.0, 0.0, 1.0]),
        fixture_log("p3", &[0.0, 0.0, 0.0, 0.0]),
    ];
    let method = vec![
        fixture_log("p1", &[1.0, 0.0, 0.0, 0.0]),
        fixture_log("p2", &[0.0, 1.0, 0.0, 0.0]),
        fixture_log("p3", &[0.0, 0.0, 1.0, 0.0]),
    ];
    let groups = vec![("base".to_string(), base.clone()), ("method".to_string(), method)];
    let rows = compare_groups(&groups, "pass-at-k", &[1, 2, 3, 4]).unwrap();
    // base pass: 0, 1/3, 1/3, 2/3; method pass: 1/3, 2/3, 1, 1
    let want = [(0.0, 1.0 / 3.0), (1.0 / 3.0, 2.0 / 3.0), (1.0 / 3.0, 1.0), (2.0 / 3.0, 1.0)];
    let hand_reduction = [1.0 / 3.0, 0.5, 1.0, 1.0];
    for (i, ((b, m), red)) in want.iter().zip(hand_reduction).enumerate() {
        let base_row = &rows[i];
        let method_row = &rows[4 + i];
        assert_eq!(base_row.method, "base");
        assert!((base_row.value - b).abs() < 1e-12);
        assert_eq!(base_row.error_reduction, Some(0.0));
        assert!((method_row.value - m).abs() < 1e-12);
        assert!((method_row.error_reduction.unwrap() - red).abs() < 1e-12, "k={}", i + 1);
    }

    // token axis: 2 tokens per sample
    let rows = compare_groups(&groups, "pass-at-token", &[4]).unwrap();
    assert!((rows[1].value - 2.0 / 3.0).abs() < 1e-12);

    let csv = compare_csv(&rows);
    assert!(csv.starts_with("method,budget,value,error_reduction\n"));

    let identical = vec![("a".to_string(), base.clone()), ("b".to_string(), base)];
    let rows = compare_groups(&identical, "pass-at-k", &[1, 2, 3, 4]).unwrap();
    // k=1: the baseline makes no progress but has errors, so reduction is 0
    assert!(rows.iter().all(|r| r.error_reduction == Some(0.0)));
}

#[test]
fn compare_and_analyze_read_run_directories() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = write(tmp.path(), "m.toml", SYNTH);
    let out = tmp.path().join("out");
    let o = bin().args(["run", "--manifest"]).arg(&manifest).arg("--out").arg(&out).output().unwrap();
    assert!(o.status.success());

    let csv_path = tmp.path().join("cmp.csv");
    let o = bin().arg("compare").arg(&out).args(["--budgets", "1,10,30", "--out"]).arg(&csv_path).output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim_end(), csv.trim_end());
    // bon is listed first (alphabetical), so it is the baseline
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 1 + 2 * 3);
    assert!(lines[1].starts_with("bon,1,"));
    assert!(tmp.path().join("cmp.json").exists());
    // a pure function of the logs
    let again = bin().arg("compare").arg(&out).args(["--budgets", "1,10,30"]).output().unwrap();
    assert_eq!(again.stdout, o.stdout);

    let o = bin().arg("analyze").arg(&out).output().unwrap();
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    for method in ["bon", "disc"] {
        let m = &v[method];
        assert_eq!(m["runs"], 2);
        for key in ["pass_at_k", "partition", "overhead", "reward_histogram"] {
            assert!(!m[key].is_null(), "{method}.{key}");
        }
    }

    let o = bin().arg("compare").arg(tmp.path().join("missing")).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn synth_bench_writes_report_and_logs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("bench");
    let o = bin()
        .args(["synth-bench", "--suite", "wiener", "--seeds", "6", "--budgets", "1,8", "--parallel", "2", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report, serde_json::from_slice::<serde_json::Value>(&o.stdout).unwrap());
    assert_eq!(report["suite"], "wiener");
    let methods: Vec<&str> = report["methods"].as_array().unwrap().iter().map(|m| m["method"].as_str().unwrap()).collect();
    assert_eq!(methods, ["disc", "bon"]);
    // at K = 1 both methods have drawn the same single rollout
    let at1: Vec<f64> =
        report["methods"].as_array().unwrap().iter().map(|m| m["points"][0]["mean_best"].as_f64().unwrap()).collect();
    assert_eq!(at1[0], at1[1]);
    assert_eq!(jsonl_files(&out).len(), 12);
}
