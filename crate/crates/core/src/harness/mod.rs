//! Run persistence, metrics, and benchmark reports.

pub mod analysis;
pub mod bench;
pub mod method;
pub mod metrics;
pub mod runlog;

pub use analysis::{bootstrap_mean_ci, paired_t_test, relative_error_reduction, reward_histogram, Histogram, PairedTTest};
pub use bench::{run_synth_logs, synth_bench, synth_report, SynthBenchConfig, SynthReport};
pub use method::{run_logged, run_method, Method, RunSettings};
pub use metrics::{
    best_within, overhead_report, partition_stats, pass_at_k, pass_at_token, solve_count, solve_tokens, BudgetAxis,
    Curve, OverheadReport, PartitionStats, StepGroup,
};
pub use runlog::{load_dir, RunHeader, RunLog, RunSummary};
