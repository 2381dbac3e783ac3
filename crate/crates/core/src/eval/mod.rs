//! Rating scales, trace analyses and the experiment runner.

mod experiment;
mod metrics;
mod report;

use std::path::PathBuf;

use thiserror::Error;

pub use experiment::{
    expand_policies, load_instance, run_experiment, run_experiment_file, run_one, ExperimentConfig, InstanceEntry,
    LoadedInstance, RunRecord,
};
pub use metrics::{
    best_as, coverage, guidance_score, quality_score, run_lengths, speed_score, switch_frequency, usage_quarters,
    SwitchHistogram, GUIDANCE_LIMIT, SPEED_LIMIT_SECS,
};
pub use report::{aggregate, load_records, records_csv, DomainScores, MetricScores, Report, StrategyRow};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no runs to aggregate")]
    NoRuns,
    #[error("strategy family has no members")]
    FamilyTooSmall,
    #[error("trace of length {0} is too short (need at least 4 steps)")]
    TraceTooShort(usize),
    #[error("{0}")]
    Shape(String),
    #[error("cannot load task {path}: {reason}")]
    MissingTask { path: PathBuf, reason: String },
    #[error("invalid policy spec: {0}")]
    InvalidPolicySpec(String),
    #[error("budgets must be positive")]
    BudgetNonPositive,
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Search(#[from] crate::search::SearchError),
    #[error(transparent)]
    Heuristic(#[from] crate::heuristics::HeuristicError),
    #[error(transparent)]
    Policy(#[from] crate::dac::DacError),
}
