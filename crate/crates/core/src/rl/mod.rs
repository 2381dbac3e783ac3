//! Double deep Q-learning of heuristic control policies.

mod adam;
mod mlp;
mod model;
mod replay;
mod train;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use adam::Adam;
pub use mlp::{argmax, Mlp};
pub use model::{Normalizer, QPolicy, MODEL_FORMAT, MODEL_VERSION};
pub use replay::{ReplayBuffer, Transition};
pub use train::{evaluate_policy, train, EvalPoint, EvalSummary, TrainInstance, TrainOutcome};

use crate::search::SearchError;

#[derive(Debug, Error)]
pub enum RlError {
    #[error("expected length {expected}, found {found}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("invalid architecture: {0}")]
    Architecture(String),
    #[error("batch is empty")]
    EmptyBatch,
    #[error("no training instances")]
    EmptyInstanceSet,
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("model file: {0}")]
    Model(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Search(#[from] SearchError),
}

/// Hyperparameters of a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub hidden: Vec<usize>,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub epsilon_decay_steps: u64,
    pub gamma: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub replay_capacity: usize,
    pub warmup: usize,
    pub target_sync_interval: u64,
    pub total_updates: u64,
    /// Expansion cutoff per training episode.
    pub episode_cutoff: u64,
    /// Expansion cutoff for greedy evaluation rollouts.
    pub eval_cutoff: u64,
    pub eval_interval: u64,
    /// Running z-normalization of the inputs.
    pub normalize: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden: vec![75, 75],
            epsilon_start: 1.0,
            epsilon_end: 0.1,
            epsilon_decay_steps: 500_000,
            gamma: 0.99,
            learning_rate: 1e-3,
            batch_size: 32,
            replay_capacity: 100_000,
            warmup: 1_000,
            target_sync_interval: 1_000,
            total_updates: 1_000_000,
            episode_cutoff: 7_500,
            eval_cutoff: 7_500,
            eval_interval: 30_000,
            normalize: false,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), RlError> {
        let bad = |m: &str| Err(RlError::Config(m.to_string()));
        if !(0.0 <= self.epsilon_end && self.epsilon_end <= self.epsilon_start && self.epsilon_start <= 1.0) {
            return bad("need 0 <= epsilon_end <= epsilon_start <= 1");
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0, 1]");
        }
        if self.episode_cutoff == 0 || self.eval_cutoff == 0 {
            return bad("cutoffs must be positive");
        }
        if self.batch_size == 0 || self.replay_capacity < self.batch_size {
            return bad("replay capacity must hold at least one batch");
        }
        if self.eval_interval == 0 || self.target_sync_interval == 0 {
            return bad("intervals must be positive");
        }
        if self.hidden.contains(&0) {
            return bad("hidden layers need at least one unit");
        }
        Ok(())
    }
}

/// Linear decay from `epsilon_start` to `epsilon_end`, constant afterwards.
pub fn epsilon_at(config: &TrainConfig, update_step: u64) -> f64 {
    if config.epsilon_decay_steps == 0 || update_step >= config.epsilon_decay_steps {
        return config.epsilon_end;
    }
    let frac = update_step as f64 / config.epsilon_decay_steps as f64;
    config.epsilon_start + (config.epsilon_end - config.epsilon_start) * frac
}

/// `r` if terminal, else `r + gamma * Q_target(s', argmax_a Q_online(s', a))`.
pub fn double_dqn_target(online: &Mlp, target: &Mlp, tr: &Transition, gamma: f64) -> Result<f64, RlError> {
    if tr.done {
        return Ok(tr.reward);
    }
    let best = argmax(&online.forward(&tr.next_state)?);
    Ok(tr.reward + gamma * target.forward(&tr.next_state)?[best])
}
