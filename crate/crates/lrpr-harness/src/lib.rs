//! Experiment harness for the lrpr library: seeded trial batteries with
//! best-k aggregation, time-to-accuracy comparisons against the unstructured
//! baseline, rank-estimation studies, subspace-tracking demos, and an
//! invariant self-test suite. All reports are reproducible: trials derive
//! their seeds from the experiment seed and aggregation is thread-count
//! independent.

use thiserror::Error;

pub mod config;
pub mod runner;
pub mod selftest;

pub use config::{ExperimentConfig, ExperimentKind, RankRuleConfig};
pub use runner::{
    aggregate, aggregate_csv_without_time, run_pst_demo, run_rank_est, run_recover,
    run_time_compare, rwf_baseline_trace, write_aggregate_csv, write_pst_csv, write_trials_csv,
    Aggregate, BaselineTrace, PstReport, RankEstReport, RecoverReport, TimeCompareReport,
    TrialRecord, TrialStatus,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("solver error: {0}")]
    Solver(#[from] lrpr::Error),
}
