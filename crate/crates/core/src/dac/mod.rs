//! Planner-state features and heuristic control policies.

mod features;
mod policy;
mod spec;

use thiserror::Error;

pub use features::{compute_features, feature_diff, feature_len, FeatureDiff, FeatureVector, ListFeatures, STATS_PER_LIST};
pub use policy::{
    alternation_select, argmin_mu_select, lift_policy, AlternationPolicy, ArgminMuPolicy, ControlPolicy, DacPolicy,
    Finish, Observation, Permutation, RandomPolicy, ScriptedPolicy, SinglePolicy, StaticPolicy,
};
pub use spec::{build_policy, PolicySpec};

/// Reward delivered to the controller for every expansion step.
pub const STEP_REWARD: f64 = -1.0;

/// The per-step reward. Every expansion costs the same, the last one included.
pub fn step_reward() -> f64 {
    STEP_REWARD
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DacError {
    #[error("feature vectors have {found} lists, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("{0:?} is not a permutation")]
    InvalidPermutation(Vec<usize>),
    #[error("all open lists are empty")]
    AllListsEmpty,
    #[error("scripted policy has an empty script")]
    EmptyScript,
    #[error("invalid policy spec `{0}`")]
    InvalidSpec(String),
    #[error("policy selected heuristic {index} but the portfolio has {n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("could not load policy: {0}")]
    Load(String),
    #[error("controller disconnected: {0}")]
    Disconnected(String),
    #[error("controller timed out")]
    Timeout,
    #[error("protocol error: {0}")]
    Protocol(String),
}

impl DacError {
    /// Outcome tag used when a search is aborted by this error.
    pub fn outcome_tag(&self) -> &'static str {
        match self {
            Self::Disconnected(_) => "controller-disconnected",
            Self::Timeout => "controller-timeout",
            Self::Protocol(_) | Self::IndexOutOfRange { .. } => "protocol-error",
            _ => "policy-error",
        }
    }
}
