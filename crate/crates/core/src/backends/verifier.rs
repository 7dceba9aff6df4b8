//! Ground-truth verifiers: exact and numeric answer matching, and an
//! external-command test runner that scores the fraction of tests passed.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::OnceLock;
use std::time::Duration;

use regex::Regex;
use serde::{Deserialize, Serialize};
use wait_timeout::ChildExt;

use crate::error::{DiscError, Result};
use crate::policy::RewardModel;
use crate::problem::Problem;
use crate::seq::TextSeq;

/// Environment variables passed through to sandboxed commands.
pub const ENV_ALLOWLIST: &[&str] = &["PATH", "LANG", "LC_ALL", "SYSTEMROOT", "TMPDIR"];

const MAX_CAPTURE: u64 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VerifierSpec {
    ExactMatch {
        target: String,
    },
    NumericMatch {
        target: f64,
        #[serde(default = "default_tolerance")]
        tolerance: f64,
    },
    /// Runs `command` once per test in a fresh directory containing the
    /// solution. Placeholders: `{solution}` (path of the written solution),
    /// `{test}` (path of the copied test file), `{dir}` (sandbox directory).
    ExternalCommand {
        command: Vec<String>,
        tests: Vec<TestCase>,
        #[serde(default = "default_timeout_ms")]
        timeout_ms: u64,
        #[serde(default = "default_solution_file")]
        solution_file: String,
        #[serde(default = "default_workers")]
        workers: usize,
    },
    Constant {
        value: f64,
    },
}

/// A test passes when the command exits with status 0 and, if given, its
/// standard output matches `expected_stdout` up to surrounding whitespace.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TestCase {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stdin: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_stdout: Option<String>,
    /// Copied into the sandbox and substituted for `{test}`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

fn default_tolerance() -> f64 {
    1e-6
}
fn default_timeout_ms() -> u64 {
    10_000
}
fn default_solution_file() -> String {
    "solution.txt".into()
}
fn default_workers() -> usize {
    1
}

fn number_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?").unwrap())
}

/// Last numeric literal in `text`.
pub fn extract_last_number(text: &str) -> Option<f64> {
    number_regex()
        .find_iter(text)
        .filter_map(|m| m.as_str().parse::<f64>().ok())
        .last()
}

/// Scores the part of `solution` after the problem's prompt.
pub fn score_with_verifier(spec: &VerifierSpec, problem: &Problem, solution: &TextSeq) -> Result<f64> {
    let response = problem.response(solution);
    match spec {
        VerifierSpec::ExactMatch { target } => Ok(if response.trim() == target.trim() { 1.0 } else { 0.0 }),
        VerifierSpec::NumericMatch { target, tolerance } => match extract_last_number(response) {
            Some(x) => Ok(if (x - target).abs() <= *tolerance { 1.0 } else { 0.0 }),
            None => {
                log::warn!("problem {}: no number found in the response; scoring 0", problem.id);
                Ok(0.0)
            }
        },
        VerifierSpec::Constant { value } => Ok(*value),
        VerifierSpec::ExternalCommand { command, tests, timeout_ms, solution_file, workers } => {
            if command.is_empty() {
                return Err(DiscError::Config("external command is empty".into()));
            }
            if tests.is_empty() {
                return Ok(0.0);
            }
            let timeout = Duration::from_millis(*timeout_ms);
            let run = |t: &TestCase| run_test(command, t, response, solution_file, timeout);
            let passed = if *workers <= 1 {
                tests.iter().map(run).collect::<Result<Vec<_>>>()?
            } else {
                run_parallel(tests, *workers, &run)?
            };
            Ok(passed.iter().filter(|&&p| p).count() as f64 / tests.len() as f64)
        }
    }
}

fn run_parallel(tests: &[TestCase], workers: usize, run: &(dyn Fn(&TestCase) -> Result<bool> + Sync)) -> Result<Vec<bool>> {
    let chunk = tests.len().div_ceil(workers);
    std::thread::scope(|scope| {
        let handles: Vec<_> = tests
            .chunks(chunk)
            .map(|c| scope.spawn(move || c.iter().map(run).collect::<Result<Vec<_>>>()))
            .collect();
        let mut out = Vec::with_capacity(tests.len());
        for h in handles {
            out.extend(h.join().map_err(|_| DiscError::Backend("verifier worker panicked".into()))??);
        }
        Ok(out)
    })
}

/// One test in a fresh sandbox directory. Crashes and timeouts are failures,
/// not errors; only sandbox setup problems are errors.
fn run_test(command: &[String], test: &TestCase, response: &str, solution_file: &str, timeout: Duration) -> Result<bool> {
    let dir = tempfile::tempdir()?;
    let solution_path = dir.path().join(solution_file);
    std::fs::write(&solution_path, response)?;
    let test_path = match &test.file {
        Some(src) => {
            let name = src
                .file_name()
                .ok_or_else(|| DiscError::Config(format!("test file {src:?} has no name")))?;
            let dst = dir.path().join(name);
            std::fs::copy(src, &dst)?;
            Some(dst)
        }
        None => None,
    };
    let subst = |arg: &str| {
        let mut a = arg.replace("{solution}", &solution_path.to_string_lossy());
        a = a.replace("{dir}", &dir.path().to_string_lossy());
        if let Some(t) = &test_path {
            a = a.replace("{test}", &t.to_string_lossy());
        }
        a
    };
    let mut cmd = Command::new(subst(&command[0]));
    cmd.args(command[1..].iter().map(|a| subst(a)))
        .current_dir(dir.path())
        .env_clear()
        .env("HOME", dir.path())
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null());
    #[cfg(unix)]
    {
        use std::os::unix::process::CommandExt;
        cmd.process_group(0);
    }
    for key in ENV_ALLOWLIST {
        if let Ok(v) = std::env::var(key) {
            cmd.env(key, v);
        }
    }
    let mut child = match cmd.spawn() {
        Ok(c) => c,
        Err(e) => {
            log::warn!("could not start {:?}: {e}", command[0]);
            return Ok(false);
        }
    };
    let stdin = child.stdin.take();
    let input = test.stdin.clone().unwrap_or_default();
    let writer = std::thread::spawn(move || {
        if let Some(mut s) = stdin {
            let _ = s.write_all(input.as_bytes());
        }
    });
    let stdout = child.stdout.take();
    let reader = std::thread::spawn(move || {
        let mut buf = Vec::new();
        if let Some(s) = stdout {
            let _ = s.take(MAX_CAPTURE).read_to_end(&mut buf);
        }
        buf
    });
    let status = match child.wait_timeout(timeout)? {
        Some(status) => Some(status),
        None => {
            kill_tree(&mut child);
            let _ = child.wait();
            None
        }
    };
    let Some(status) = status else {
        // grandchildren may still hold the pipes; do not wait on the readers
        log::debug!("test timed out after {timeout:?}");
        return Ok(false);
    };
    let _ = writer.join();
    let out = reader.join().unwrap_or_default();
    if !status.success() {
        return Ok(false);
    }
    Ok(match &test.expected_stdout {
        Some(exp) => String::from_utf8_lossy(&out).trim() == exp.trim(),
        None => true,
    })
}

fn kill_tree(child: &mut std::process::Child) {
    #[cfg(unix)]
    // SAFETY: signals the process group created for this child only
    unsafe {
        libc::kill(-(child.id() as libc::pid_t), libc::SIGKILL);
    }
    let _ = child.kill();
}

/// Scores solutions with the verifier attached to each problem.
#[derive(Debug, Clone, Copy, Default)]
pub struct VerifierReward;

impl RewardModel for VerifierReward {
    fn score(&self, problem: &Problem, solution: &TextSeq) -> Result<f64> {
        let spec = problem
            .verifier
            .as_ref()
            .ok_or_else(|| DiscError::Config(format!("problem {} has no verifier", problem.id)))?;
        score_with_verifier(spec, problem, solution)
    }
}

/// Whether `path` resolves to an executable we can run, for preflight checks.
pub fn command_exists(path: &Path) -> bool {
    if path.components().count() > 1 {
        return path.exists();
    }
    std::env::var_os("PATH")
        .map(|paths| std::env::split_paths(&paths).any(|d| d.join(path).exists()))
        .unwrap_or(false)
}
