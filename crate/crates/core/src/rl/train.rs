use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{argmax, double_dqn_target, epsilon_at, Adam, Mlp, Normalizer, QPolicy, ReplayBuffer, RlError, TrainConfig, Transition};
use crate::dac::{feature_len, step_reward, ControlPolicy, DacError, Finish, Observation};
use crate::heuristics::Portfolio;
use crate::search::{Budget, GbfsSearch, TraceMode};
use crate::task::Task;

/// A training or evaluation instance with its heuristic portfolio.
pub struct TrainInstance<'a, T: Task + ?Sized> {
    pub task: &'a T,
    pub portfolio: &'a Portfolio<T>,
}

impl<T: Task + ?Sized> Clone for TrainInstance<'_, T> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<T: Task + ?Sized> Copy for TrainInstance<'_, T> {}

/// Greedy rollouts over a set of instances. Unsolved runs contribute the
/// expansions they used before the cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub solved: usize,
    pub instances: usize,
    pub total_expansions: u64,
}

impl EvalSummary {
    pub fn mean_expansions(&self) -> f64 {
        self.total_expansions as f64 / self.instances.max(1) as f64
    }

    /// Coverage first, then fewer total expansions.
    pub fn better_than(&self, other: &EvalSummary) -> bool {
        self.solved > other.solved || (self.solved == other.solved && self.total_expansions < other.total_expansions)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalPoint {
    pub update_step: u64,
    pub episode: u64,
    pub summary: EvalSummary,
    pub new_incumbent: bool,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Best policy seen at any evaluation (the initial network if none ran).
    pub policy: QPolicy,
    pub curve: Vec<EvalPoint>,
    pub episodes: u64,
    pub updates: u64,
}

/// Runs one fresh policy per instance and sums up the results.
pub fn evaluate_policy<T, P, F>(instances: &[TrainInstance<'_, T>], mut make: F, cutoff: u64) -> Result<EvalSummary, RlError>
where
    T: Task + ?Sized,
    P: ControlPolicy,
    F: FnMut(usize) -> P,
{
    let mut summary = EvalSummary { solved: 0, instances: instances.len(), total_expansions: 0 };
    for (i, inst) in instances.iter().enumerate() {
        let mut policy = make(i);
        let result = GbfsSearch::new(inst.task, inst.portfolio, Budget::expansions(cutoff))?
            .with_trace_mode(TraceMode::ChoicesOnly)
            .run(&mut policy)?;
        if result.outcome.is_solved() {
            summary.solved += 1;
        }
        summary.total_expansions += result.expansions;
    }
    Ok(summary)
}

struct Agent {
    config: TrainConfig,
    online: Mlp,
    target: Mlp,
    adam: Adam,
    replay: ReplayBuffer,
    rng: ChaCha8Rng,
    normalizer: Option<Normalizer>,
    updates: u64,
}

impl Agent {
    fn new(config: &TrainConfig, n: usize) -> Result<Self, RlError> {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut sizes = vec![feature_len(n)];
        sizes.extend(&config.hidden);
        sizes.push(n);
        let online = Mlp::random(&sizes, &mut rng)?;
        Ok(Self {
            config: config.clone(),
            target: online.clone(),
            adam: Adam::new(online.params().len(), config.learning_rate),
            online,
            replay: ReplayBuffer::new(config.replay_capacity),
            rng,
            normalizer: config.normalize.then(|| Normalizer::new(feature_len(n))),
            updates: 0,
        })
    }

    fn input(&self, x: &[f64]) -> Vec<f64> {
        match &self.normalizer {
            Some(n) => n.apply(x),
            None => x.to_vec(),
        }
    }

    fn snapshot(&self) -> QPolicy {
        QPolicy::new(self.online.clone(), self.normalizer.clone(), self.config.clone())
    }

    fn store(&mut self, t: Transition) -> Result<(), RlError> {
        self.replay.push(t);
        self.learn()
    }

    /// One gradient step on a uniformly sampled batch, once warmed up.
    fn learn(&mut self) -> Result<(), RlError> {
        if self.updates >= self.config.total_updates || self.replay.len() < self.config.warmup.max(self.config.batch_size) {
            return Ok(());
        }
        let indices = self
            .replay
            .sample_indices(self.config.batch_size, &mut self.rng)
            .expect("buffer holds a full batch");
        let mut inputs = Vec::with_capacity(indices.len());
        let mut targets = Vec::with_capacity(indices.len());
        for &i in &indices {
            let tr = self.replay.get(i);
            let normalized = Transition {
                state: Vec::new(),
                action: tr.action,
                reward: tr.reward,
                next_state: self.input(&tr.next_state),
                done: tr.done,
            };
            targets.push(double_dqn_target(&self.online, &self.target, &normalized, self.config.gamma)?);
            inputs.push((self.input(&tr.state), tr.action));
        }
        let batch: Vec<(&[f64], usize, f64)> =
            inputs.iter().zip(&targets).map(|((x, a), &y)| (x.as_slice(), *a, y)).collect();
        let (_, grad) = self.online.td_loss_and_gradient(&batch)?;
        self.adam.step(self.online.params_mut(), &grad);
        self.updates += 1;
        if self.updates % self.config.target_sync_interval == 0 {
            self.target = self.online.clone();
        }
        Ok(())
    }
}

/// Epsilon-greedy behaviour policy that feeds every step into the agent.
struct Actor<'a> {
    agent: &'a mut Agent,
    n: usize,
    pending: Option<(Vec<f64>, usize)>,
    error: Option<RlError>,
}

impl Actor<'_> {
    fn record(&mut self, t: Transition) {
        if self.error.is_none() {
            if let Err(e) = self.agent.store(t) {
                self.error = Some(e);
            }
        }
    }
}

impl ControlPolicy for Actor<'_> {
    fn select(&mut self, obs: &Observation<'_>) -> Result<usize, DacError> {
        let x = obs.diff.as_slice().to_vec();
        if let Some(norm) = &mut self.agent.normalizer {
            norm.observe(&x);
        }
        if let Some((state, action)) = self.pending.take() {
            self.record(Transition { state, action, reward: step_reward(), next_state: x.clone(), done: false });
        }
        let epsilon = epsilon_at(&self.agent.config, self.agent.updates);
        let action = if self.agent.rng.gen::<f64>() < epsilon {
            self.agent.rng.gen_range(0..self.n)
        } else {
            let q = self
                .agent
                .online
                .forward(&self.agent.input(&x))
                .map_err(|e| DacError::Load(e.to_string()))?;
            argmax(&q)
        };
        self.pending = Some((x, action));
        Ok(action)
    }

    fn finish(&mut self, fin: &Finish<'_>) -> Result<(), DacError> {
        if let Some((state, action)) = self.pending.take() {
            let next_state = fin.diff.as_slice().to_vec();
            let t = if fin.goal_popped {
                // popping the goal ends the episode without another expansion
                Transition { state, action, reward: 0.0, next_state, done: true }
            } else {
                let done = fin.outcome == "exhausted";
                Transition { state, action, reward: step_reward(), next_state, done }
            };
            self.record(t);
        }
        Ok(())
    }
}

/// Trains a Q-network on `instances` (visited round-robin) and returns the
/// best greedy policy found at the periodic evaluations.
pub fn train<T: Task + ?Sized>(instances: &[TrainInstance<'_, T>], config: &TrainConfig) -> Result<TrainOutcome, RlError> {
    config.validate()?;
    let first = instances.first().ok_or(RlError::EmptyInstanceSet)?;
    let n = first.portfolio.len();
    if instances.iter().any(|i| i.portfolio.len() != n) {
        return Err(RlError::Config("all instances need portfolios of equal size".into()));
    }

    let mut agent = Agent::new(config, n)?;
    let mut incumbent = agent.snapshot();
    let mut best: Option<EvalSummary> = None;
    let mut curve = Vec::new();
    let mut next_eval = config.eval_interval;
    let mut episode = 0u64;

    while agent.updates < config.total_updates {
        let inst = &instances[(episode % instances.len() as u64) as usize];
        let mut actor = Actor { agent: &mut agent, n, pending: None, error: None };
        GbfsSearch::new(inst.task, inst.portfolio, Budget::expansions(config.episode_cutoff))?
            .with_trace_mode(TraceMode::ChoicesOnly)
            .run(&mut actor)?;
        if let Some(e) = actor.error.take() {
            return Err(e);
        }
        episode += 1;

        if agent.updates >= next_eval {
            let candidate = agent.snapshot();
            let summary = evaluate_policy(instances, |_| candidate.clone(), config.eval_cutoff)?;
            let improved = best.map_or(true, |b| summary.better_than(&b));
            if improved {
                best = Some(summary);
                incumbent = candidate;
            }
            curve.push(EvalPoint { update_step: agent.updates, episode, summary, new_incumbent: improved });
            while next_eval <= agent.updates {
                next_eval += config.eval_interval;
            }
        }
    }

    Ok(TrainOutcome { policy: incumbent, curve, episodes: episode, updates: agent.updates })
}
