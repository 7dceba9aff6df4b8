//! Command-line front end: `run`, `compare`, `analyze`, `synth-bench`.
//!
//! Configuration comes from a TOML manifest; flags override manifest keys.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backends::http::{HttpConfig, HttpGenerationBackend};
use crate::backends::synthetic::{suite_instance, SuiteConfig, SyntheticSuite};
use crate::backends::verifier::{command_exists, VerifierReward, VerifierSpec};
use crate::engine::EngineConfig;
use crate::error::{DiscError, Result};
use crate::harness::{
    load_dir, overhead_report, partition_stats, pass_at_k, pass_at_token, relative_error_reduction,
    reward_histogram, run_logged, run_synth_logs, synth_report, Curve, Method, RunLog, RunSettings, SynthBenchConfig,
};
use crate::policy::{GenerationPolicy, RewardModel};
use crate::problem::{load_problem_set, Problem};
use crate::search::{LearningRate, SearchConfig};
use crate::stats::AcceptanceCriterion;

#[derive(Debug, Parser)]
#[command(name = "disc", version, about = "Dynamic step decomposition for inference-time search")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run methods over a problem set (or synthetic instances), one log per cell.
    Run(RunArgs),
    /// Compare pass curves across log directories; the first is the baseline.
    Compare(CompareArgs),
    /// Per-step statistics, overhead, and reward histogram of a log directory.
    Analyze(AnalyzeArgs),
    /// Methods versus best-of-n on a synthetic suite.
    SynthBench(SynthArgs),
}

/// Flags shared by commands that execute searches.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonFlags {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long = "budget-samples")]
    pub budget_samples: Option<usize>,
    #[arg(long = "budget-tokens")]
    pub budget_tokens: Option<usize>,
    #[arg(long)]
    pub alpha0: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, value_parser = ["z", "q", "negz", "negq", "random", "zguard"])]
    pub criterion: Option<String>,
    /// Repeat to run several methods.
    #[arg(long, value_parser = ["disc", "disc-metric", "mcts", "beam", "bon", "tokensplit", "linesplit"])]
    pub method: Vec<String>,
    #[arg(long)]
    pub parallel: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: CommonFlags,
    /// Continue into a non-empty output directory, skipping completed cells.
    #[arg(long)]
    pub resume: bool,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Log directories. A directory whose logs sit in per-method
    /// subdirectories is expanded into one entry per subdirectory.
    #[arg(required = true)]
    pub dirs: Vec<PathBuf>,
    #[arg(long, default_value = "pass-at-k", value_parser = ["pass-at-k", "pass-at-token"])]
    pub metric: String,
    /// Comma-separated budgets.
    #[arg(long, value_delimiter = ',', default_values_t = [1usize, 5, 10])]
    pub budgets: Vec<usize>,
    /// Write the table here as CSV (and JSON next to it).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    pub dir: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub bins: usize,
    #[arg(long, value_delimiter = ',', default_values_t = [1usize, 5, 10])]
    pub budgets: Vec<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub common: CommonFlags,
    #[arg(long, value_parser = ["planted", "wiener"])]
    pub suite: Option<String>,
    #[arg(long)]
    pub seeds: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub budgets: Option<Vec<usize>>,
}

/// Search knobs of the manifest; the engine settings live in `[engine]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchKnobs {
    pub exploration_c: f64,
    pub beam_width: usize,
    pub expansions_per_node: usize,
    pub learning_rate: LearningRate,
}

impl Default for SearchKnobs {
    fn default() -> Self {
        let s = SearchConfig::default();
        SearchKnobs {
            exploration_c: s.exploration_c,
            beam_width: s.beam_width,
            expansions_per_node: s.expansions_per_node,
            learning_rate: s.learning_rate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BackendSpec {
    /// Completion endpoint; problems come from `problems` and are scored by
    /// their verifiers.
    Http(HttpConfig),
    /// Seeded synthetic instances `seed .. seed + instances`.
    Synthetic {
        suite: SyntheticSuite,
        #[serde(default = "default_instances")]
        instances: usize,
        #[serde(default)]
        config: SuiteConfig,
    },
}

fn default_instances() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub suite: SyntheticSuite,
    pub seeds: usize,
    pub budgets: Vec<usize>,
    pub config: SuiteConfig,
    pub bootstrap_resamples: usize,
}

impl Default for SynthSection {
    fn default() -> Self {
        SynthSection {
            suite: SyntheticSuite::Wiener,
            seeds: 100,
            budgets: vec![10, 25, 50],
            config: SuiteConfig::default(),
            bootstrap_resamples: 1000,
        }
    }
}

/// The single configuration artifact of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunManifest {
    pub seed: u64,
    pub out: PathBuf,
    pub parallel: usize,
    pub methods: Vec<Method>,
    /// JSONL problem set, for the HTTP backend.
    pub problems: Option<PathBuf>,
    pub engine: EngineConfig,
    pub search: SearchKnobs,
    pub line_delimiters: Vec<String>,
    pub backend: BackendSpec,
    pub synth: SynthSection,
}

impl Default for RunManifest {
    fn default() -> Self {
        RunManifest {
            seed: 0,
            out: PathBuf::from("runs"),
            parallel: 1,
            methods: vec![Method::Disc, Method::TokenSplit, Method::LineSplit, Method::Bon],
            problems: None,
            engine: EngineConfig::default(),
            search: SearchKnobs::default(),
            line_delimiters: vec!["\n".into()],
            backend: BackendSpec::Synthetic { suite: SyntheticSuite::Planted, instances: 10, config: SuiteConfig::default() },
            synth: SynthSection::default(),
        }
    }
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut m: RunManifest =
            toml::from_str(&text).map_err(|e| DiscError::Config(format!("{}: {e}", path.display())))?;
        // relative paths are relative to the manifest
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(p) = &m.problems {
            if p.is_relative() {
                m.problems = Some(base.join(p));
            }
        }
        Ok(m)
    }

    pub fn apply(&mut self, f: &CommonFlags) -> Result<()> {
        if let Some(v) = &f.out {
            self.out = v.clone();
        }
        if let Some(v) = f.seed {
            self.seed = v;
        }
        if let Some(v) = f.budget_samples {
            self.engine.budget_samples = v;
        }
        if let Some(v) = f.budget_tokens {
            self.engine.budget_tokens = Some(v);
        }
        if let Some(v) = f.alpha0 {
            self.engine.alpha0 = v;
        }
        if let Some(v) = f.sigma {
            self.engine.sigma = v;
        }
        if let Some(v) = &f.criterion {
            self.engine.criterion = v.parse::<AcceptanceCriterion>()?;
        }
        if !f.method.is_empty() {
            self.methods = f.method.iter().map(|m| m.parse()).collect::<Result<_>>()?;
        }
        if let Some(v) = f.parallel {
            self.parallel = v;
        }
        Ok(())
    }

    pub fn resolve(common: &CommonFlags) -> Result<Self> {
        let mut m = match &common.manifest {
            Some(p) => RunManifest::load(p)?,
            None => RunManifest::default(),
        };
        m.apply(common)?;
        if m.parallel == 0 {
            return Err(DiscError::Config("parallel must be >= 1".into()));
        }
        Ok(m)
    }

    pub fn settings(&self) -> RunSettings {
        RunSettings {
            search: SearchConfig {
                exploration_c: self.search.exploration_c,
                beam_width: self.search.beam_width,
                expansions_per_node: self.search.expansions_per_node,
                learning_rate: self.search.learning_rate,
                engine: EngineConfig { rng_seed: self.seed, ..self.engine.clone() },
            },
            line_delimiters: self.line_delimiters.clone(),
        }
    }
}

/// FNV-1a, for per-problem seeds that do not depend on problem order.
fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Run seed of one problem.
pub fn cell_seed(global: u64, problem_id: &str) -> u64 {
    global ^ fnv1a(problem_id)
}

/// Log path of one cell.
pub fn cell_path(out: &Path, method: Method, problem_id: &str) -> PathBuf {
    let safe: String = problem_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' })
        .collect();
    out.join(method.name()).join(format!("{safe}.jsonl"))
}

pub type Backends = (Arc<dyn GenerationPolicy>, Arc<dyn RewardModel>);

/// A problem with its resolved backends.
pub struct Cell {
    pub problem: Problem,
    pub policy: Arc<dyn GenerationPolicy>,
    pub reward: Arc<dyn RewardModel>,
}

/// Builds the problem list and backends for a manifest. Every backend and
/// verifier is checked here, before any sampling.
pub fn resolve_cells(m: &RunManifest) -> Result<Vec<Cell>> {
    match &m.backend {
        BackendSpec::Synthetic { suite, instances, config } => (0..*instances)
            .map(|i| {
                let inst = suite_instance(*suite, config, m.seed.wrapping_add(i as u64))?;
                Ok(Cell { problem: inst.problem, policy: inst.policy, reward: inst.reward })
            })
            .collect(),
        BackendSpec::Http(cfg) => {
            let path = m
                .problems
                .as_ref()
                .ok_or_else(|| DiscError::Config("the http backend needs a `problems` file".into()))?;
            let problems = load_problem_set(path)?;
            for p in &problems {
                if let Some(VerifierSpec::ExternalCommand { command, .. }) = &p.verifier {
                    let exe = command.first().map(String::as_str).unwrap_or("");
                    if !exe.contains('{') && !command_exists(Path::new(exe)) {
                        return Err(DiscError::Config(format!("problem {}: verifier command {exe:?} not found", p.id)));
                    }
                }
            }
            let policy: Arc<dyn GenerationPolicy> = Arc::new(HttpGenerationBackend::new(cfg.clone())?);
            let reward: Arc<dyn RewardModel> = Arc::new(VerifierReward);
            Ok(problems
                .into_iter()
                .map(|problem| Cell { problem, policy: policy.clone(), reward: reward.clone() })
                .collect())
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RunOutcome {
    pub written: usize,
    pub skipped: usize,
    pub failed: usize,
}

/// Runs every (problem, method) cell that has no successful log under `out`.
pub fn run_cells(cells: &[Cell], m: &RunManifest, resume: bool) -> Result<RunOutcome> {
    if m.out.exists() && std::fs::read_dir(&m.out)?.next().is_some() && !resume {
        return Err(DiscError::Config(format!(
            "output directory {} is not empty; pass --resume to continue it",
            m.out.display()
        )));
    }
    std::fs::create_dir_all(&m.out)?;
    let settings = m.settings();
    settings.search.validate()?;
    let jobs: Vec<(usize, Method)> =
        (0..cells.len()).flat_map(|i| m.methods.iter().map(move |&me| (i, me))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(m.parallel)
        .build()
        .map_err(|e| DiscError::Config(e.to_string()))?;
    let results: Vec<Result<Option<bool>>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(i, method)| {
                let cell = &cells[i];
                let path = cell_path(&m.out, method, &cell.problem.id);
                // failed cells are retried
                let done = RunLog::load(&path)
                    .is_ok_and(|l| l.summary.as_ref().is_some_and(|s| s.error.is_none()));
                if done {
                    return Ok(None);
                }
                let mut s = settings.clone();
                s.search.engine.rng_seed = cell_seed(m.seed, &cell.problem.id);
                let log = run_logged(method, &cell.problem, &*cell.policy, &*cell.reward, &s);
                log.save(&path)?;
                Ok(Some(log.summary.as_ref().is_some_and(|s| s.error.is_none())))
            })
            .collect()
    });
    let mut outcome = RunOutcome::default();
    for r in results {
        match r? {
            None => outcome.skipped += 1,
            Some(true) => outcome.written += 1,
            Some(false) => {
                outcome.written += 1;
                outcome.failed += 1;
            }
        }
    }
    Ok(outcome)
}

pub fn cmd_run(args: &RunArgs) -> Result<RunOutcome> {
    let m = RunManifest::resolve(&args.common)?;
    let cells = resolve_cells(&m)?;
    run_cells(&cells, &m, args.resume)
}

/// Groups of logs to compare, labelled by directory (or subdirectory) name.
pub fn load_groups(dirs: &[PathBuf]) -> Result<Vec<(String, Vec<RunLog>)>> {
    let mut groups = Vec::new();
    for d in dirs {
        let has_logs = std::fs::read_dir(d)?
            .filter_map(|e| e.ok())
            .any(|e| e.path().extension().is_some_and(|x| x == "jsonl"));
        let label = d.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| d.display().to_string());
        if has_logs {
            groups.push((label, load_dir(d)?));
        } else {
            let mut subs: Vec<PathBuf> =
                std::fs::read_dir(d)?.filter_map(|e| e.ok()).map(|e| e.path()).filter(|p| p.is_dir()).collect();
            subs.sort();
            for s in subs {
                let l = s.file_name().unwrap().to_string_lossy().into_owned();
                groups.push((l, load_dir(&s)?));
            }
        }
    }
    Ok(groups)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareRow {
    pub method: String,
    pub budget: usize,
    pub value: f64,
    /// Relative error reduction against the first group; empty when the
    /// baseline makes no errors.
    pub error_reduction: Option<f64>,
}

/// Curves per group and error reduction against the first group.
pub fn compare_groups(groups: &[(String, Vec<RunLog>)], metric: &str, budgets: &[usize]) -> Result<Vec<CompareRow>> {
    let curve = |logs: &[RunLog]| -> Result<Curve> {
        match metric {
            "pass-at-k" => Ok(pass_at_k(logs, budgets)),
            "pass-at-token" => Ok(pass_at_token(logs, budgets)),
            other => Err(DiscError::Config(format!("unknown metric {other:?}"))),
        }
    };
    let Some((_, base_logs)) = groups.first() else { return Ok(Vec::new()) };
    let base = curve(base_logs)?;
    let mut rows = Vec::new();
    for (label, logs) in groups {
        let c = curve(logs)?;
        for (&(b, v), &(_, bv)) in c.points.iter().zip(&base.points) {
            rows.push(CompareRow {
                method: label.clone(),
                budget: b,
                value: v,
                error_reduction: relative_error_reduction(bv, v),
            });
        }
    }
    Ok(rows)
}

pub fn compare_csv(rows: &[CompareRow]) -> String {
    let mut out = String::from("method,budget,value,error_reduction\n");
    for r in rows {
        let red = r.error_reduction.map(|x| x.to_string()).unwrap_or_default();
        out.push_str(&format!("{},{},{},{}\n", r.method, r.budget, r.value, red));
    }
    out
}

pub fn cmd_compare(args: &CompareArgs) -> Result<String> {
    let groups = load_groups(&args.dirs)?;
    let rows = compare_groups(&groups, &args.metric, &args.budgets)?;
    let csv = compare_csv(&rows);
    if let Some(path) = &args.out {
        std::fs::write(path, &csv)?;
        std::fs::write(path.with_extension("json"), serde_json::to_string_pretty(&rows)?)?;
    }
    Ok(csv)
}

pub fn analyze_logs(logs: &[RunLog], bins: usize, budgets: &[usize]) -> serde_json::Value {
    let rewards: Vec<f64> = logs.iter().flat_map(|l| l.samples.iter().map(|s| s.reward)).collect();
    let solved = logs.iter().filter(|l| l.solved()).count();
    let failed = logs.iter().filter(|l| l.summary.as_ref().is_some_and(|s| s.error.is_some())).count();
    serde_json::json!({
        "runs": logs.len(),
        "solved": solved,
        "failed": failed,
        "samples": rewards.len(),
        "tokens": logs.iter().map(RunLog::tokens_total).sum::<usize>(),
        "pass_at_k": pass_at_k(logs, budgets),
        "partition": partition_stats(logs),
        "overhead": overhead_report(logs),
        "reward_histogram": (!rewards.is_empty()).then(|| reward_histogram(&rewards, bins.max(1))),
    })
}

pub fn cmd_analyze(args: &AnalyzeArgs) -> Result<String> {
    let groups = load_groups(std::slice::from_ref(&args.dir))?;
    let by_group: BTreeMap<String, serde_json::Value> =
        groups.iter().map(|(label, logs)| (label.clone(), analyze_logs(logs, args.bins, &args.budgets))).collect();
    let text = serde_json::to_string_pretty(&by_group)?;
    if let Some(path) = &args.out {
        std::fs::write(path, &text)?;
    }
    Ok(text)
}

pub fn synth_config(m: &RunManifest, args: &SynthArgs) -> Result<SynthBenchConfig> {
    let mut synth = m.synth.clone();
    if let Some(s) = &args.suite {
        synth.suite = s.parse()?;
    }
    if let Some(s) = args.seeds {
        synth.seeds = s;
    }
    if let Some(b) = &args.budgets {
        synth.budgets = b.clone();
    }
    let methods = if args.common.method.is_empty() && args.common.manifest.is_none() {
        vec![Method::Disc, Method::Bon]
    } else {
        m.methods.clone()
    };
    let mut cfg = SynthBenchConfig::new(synth.suite, methods, synth.seeds, synth.budgets);
    let inference_mode = cfg.settings.search.engine.inference_mode;
    cfg.settings = m.settings();
    if args.common.manifest.is_none() {
        cfg.settings.search.engine.inference_mode = inference_mode;
    }
    cfg.suite_config = synth.config;
    cfg.base_seed = m.seed;
    cfg.bootstrap_resamples = synth.bootstrap_resamples;
    cfg.parallel = m.parallel > 1;
    Ok(cfg)
}

pub fn cmd_synth_bench(args: &SynthArgs) -> Result<String> {
    let m = RunManifest::resolve(&args.common)?;
    let cfg = synth_config(&m, args)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(m.parallel)
        .build()
        .map_err(|e| DiscError::Config(e.to_string()))?;
    let logs = pool.install(|| run_synth_logs(&cfg))?;
    let report = synth_report(&cfg, &logs);
    let text = serde_json::to_string_pretty(&report)?;
    if let Some(out) = &args.common.out {
        std::fs::create_dir_all(out)?;
        for (method, runs) in &logs {
            for l in runs {
                l.save(cell_path(out, *method, &l.header.problem_id))?;
            }
        }
        std::fs::write(out.join("report.json"), &text)?;
    }
    Ok(text)
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code: 0 on success, 2 on configuration or I/O errors.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a).map(|o| {
            eprintln!("{} cells written ({} failed), {} skipped", o.written, o.failed, o.skipped);
            String::new()
        }),
        Command::Compare(a) => cmd_compare(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::SynthBench(a) => cmd_synth_bench(a),
    };
    match result {
        Ok(text) => {
            if !text.is_empty() {
                let mut out = std::io::stdout().lock();
                let _ = writeln!(out, "{}", text.trim_end());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
