//! Greedy best-first search with one open list per heuristic.
//!
//! Every generated state is evaluated by all heuristics of the portfolio and
//! enters each list where its value is finite. Before each expansion a
//! [`ControlPolicy`] picks the list to pop from, so all lists share the same
//! search progress. Goal tests happen when a state is popped.

mod open_list;

use std::collections::HashMap;
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use open_list::{OpenListEntry, OpenListStats, OpenLists};

use crate::dac::{compute_features, feature_diff, step_reward, ControlPolicy, DacError, FeatureDiff, FeatureVector, Finish, Observation};
use crate::heuristics::{HeuristicError, HeuristicValue, Portfolio};
use crate::task::{OperatorId, Plan, Task};

pub type NodeId = usize;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SearchError {
    #[error("all open lists are empty")]
    AllListsEmpty,
    #[error(transparent)]
    Heuristic(#[from] HeuristicError),
}

/// Limits on a single search.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub max_expansions: Option<u64>,
    pub max_time: Option<Duration>,
}

impl Budget {
    pub fn unlimited() -> Self {
        Self::default()
    }

    pub fn expansions(max: u64) -> Self {
        Self { max_expansions: Some(max), max_time: None }
    }

    pub fn with_time(mut self, max: Duration) -> Self {
        self.max_time = Some(max);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeStatus {
    Open,
    Expanded,
}

#[derive(Debug, Clone)]
pub struct SearchNode<S> {
    pub state: S,
    pub parent: Option<NodeId>,
    pub operator: Option<OperatorId>,
    pub h_values: Vec<HeuristicValue>,
    pub status: NodeStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Outcome {
    PlanFound { plan: Plan, cost: u64 },
    Exhausted,
    BudgetExceeded,
    /// The controller failed; `tag` names the failure class.
    Aborted { tag: String, reason: String },
}

impl Outcome {
    pub fn tag(&self) -> &str {
        match self {
            Self::PlanFound { .. } => "plan-found",
            Self::Exhausted => "exhausted",
            Self::BudgetExceeded => "budget-exceeded",
            Self::Aborted { tag, .. } => tag,
        }
    }

    pub fn is_solved(&self) -> bool {
        matches!(self, Self::PlanFound { .. })
    }

    pub fn cost(&self) -> Option<u64> {
        match self {
            Self::PlanFound { cost, .. } => Some(*cost),
            _ => None,
        }
    }

    pub fn plan(&self) -> Option<&Plan> {
        match self {
            Self::PlanFound { plan, .. } => Some(plan),
            _ => None,
        }
    }
}

/// One expansion step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub t: u64,
    /// The list actually popped from (after empty-list fallback).
    pub chosen: usize,
    pub reward: f64,
    /// Feature diff observed before the step; empty when not recorded.
    pub diff: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TraceMode {
    /// Record the feature diff of every step.
    #[default]
    Full,
    /// Record only the chosen list and reward.
    ChoicesOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub outcome: Outcome,
    pub expansions: u64,
    pub generated: u64,
    pub trace: Vec<TraceStep>,
    pub wall_time: Duration,
}

impl SearchResult {
    /// `{outcome, expansions, generated, cost, wall_time_ms}`.
    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "outcome": self.outcome.tag(),
            "expansions": self.expansions,
            "generated": self.generated,
            "cost": self.outcome.cost(),
            "wall_time_ms": self.wall_time.as_secs_f64() * 1e3,
        })
    }

    /// Sequence of lists popped from, one per expansion.
    pub fn choices(&self) -> Vec<usize> {
        self.trace.iter().map(|s| s.chosen).collect()
    }

    /// CSV with header `t,chosen_h,reward,<5n diff columns>`.
    pub fn trace_csv(&self, n: usize) -> String {
        const STATS: [&str; 5] = ["max", "min", "mean", "var", "count"];
        let mut out = String::from("t,chosen_h,reward");
        for h in 0..n {
            for s in STATS {
                write!(out, ",d_{s}_{h}").unwrap();
            }
        }
        out.push('\n');
        for step in &self.trace {
            write!(out, "{},{},{}", step.t, step.chosen, step.reward).unwrap();
            let stats = step.diff.len().saturating_sub(1);
            for v in &step.diff[..stats] {
                write!(out, ",{v}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Incremental search state; [`GbfsSearch::step`] performs one control step.
pub struct GbfsSearch<'a, T: Task + ?Sized> {
    task: &'a T,
    portfolio: &'a Portfolio<T>,
    budget: Budget,
    trace_mode: TraceMode,
    registry: HashMap<T::State, NodeId>,
    nodes: Vec<SearchNode<T::State>>,
    lists: OpenLists,
    t: u64,
    prev_features: Option<FeatureVector>,
    expansions: u64,
    generated: u64,
    trace: Vec<TraceStep>,
    started: Instant,
    outcome: Option<Outcome>,
}

impl<'a, T: Task + ?Sized> GbfsSearch<'a, T> {
    pub fn new(task: &'a T, portfolio: &'a Portfolio<T>, budget: Budget) -> Result<Self, SearchError> {
        let mut search = Self {
            task,
            portfolio,
            budget,
            trace_mode: TraceMode::Full,
            registry: HashMap::new(),
            nodes: Vec::new(),
            lists: OpenLists::new(portfolio.len()),
            t: 0,
            prev_features: None,
            expansions: 0,
            generated: 0,
            trace: Vec::new(),
            started: Instant::now(),
            outcome: None,
        };
        search.insert_successor(task.initial_state(), None, None)?;
        Ok(search)
    }

    pub fn with_trace_mode(mut self, mode: TraceMode) -> Self {
        self.trace_mode = mode;
        self
    }

    pub fn open_lists(&self) -> &OpenLists {
        &self.lists
    }

    pub fn nodes(&self) -> &[SearchNode<T::State>] {
        &self.nodes
    }

    pub fn expansions(&self) -> u64 {
        self.expansions
    }

    pub fn generated(&self) -> u64 {
        self.generated
    }

    pub fn outcome(&self) -> Option<&Outcome> {
        self.outcome.as_ref()
    }

    pub fn is_expanded(&self, node: NodeId) -> bool {
        self.nodes[node].status == NodeStatus::Expanded
    }

    /// Statistics recomputed from the heaps, for consistency checks.
    pub fn recomputed_stats(&self) -> Vec<OpenListStats> {
        self.lists.recompute_stats(|id| self.nodes[id].status == NodeStatus::Expanded)
    }

    /// Registers a newly generated state and queues it. Duplicates are dropped.
    fn insert_successor(
        &mut self,
        state: T::State,
        parent: Option<NodeId>,
        operator: Option<OperatorId>,
    ) -> Result<(), SearchError> {
        if self.registry.contains_key(&state) {
            return Ok(());
        }
        let h_values = self.portfolio.evaluate_all(self.task, &state)?;
        let id = self.nodes.len();
        self.generated += 1;
        self.lists.insert(id, &h_values);
        self.registry.insert(state.clone(), id);
        self.nodes.push(SearchNode { state, parent, operator, h_values, status: NodeStatus::Open });
        Ok(())
    }

    fn extract_plan(&self, mut node: NodeId) -> Plan {
        let mut ops = Vec::new();
        while let Some(op) = self.nodes[node].operator {
            ops.push(op);
            node = self.nodes[node].parent.expect("node with an operator has a parent");
        }
        ops.reverse();
        Plan::new(ops)
    }

    fn budget_exhausted(&self) -> bool {
        self.budget.max_expansions.is_some_and(|m| self.expansions >= m)
            || self.budget.max_time.is_some_and(|m| self.started.elapsed() >= m)
    }

    fn stop<P: ControlPolicy + ?Sized>(
        &mut self,
        policy: &mut P,
        outcome: Outcome,
        features: &FeatureVector,
        diff: &FeatureDiff,
        goal_popped: bool,
    ) {
        // the search result stands even if the controller goes away at the very end
        let _ = policy.finish(&Finish { t: self.t, features, diff, outcome: outcome.tag(), goal_popped });
        self.outcome = Some(outcome);
    }

    /// Performs one control step. Returns the outcome once the search has stopped.
    pub fn step<P: ControlPolicy + ?Sized>(&mut self, policy: &mut P) -> Result<Option<&Outcome>, SearchError> {
        if self.outcome.is_some() {
            return Ok(self.outcome.as_ref());
        }
        let features = compute_features(self.lists.stats(), self.t);
        let diff = match &self.prev_features {
            Some(prev) => feature_diff(prev, &features).expect("portfolio size is fixed"),
            None => FeatureDiff::initial(&features),
        };

        if self.budget_exhausted() {
            self.stop(policy, Outcome::BudgetExceeded, &features, &diff, false);
            return Ok(self.outcome.as_ref());
        }
        if self.lists.is_empty() {
            self.stop(policy, Outcome::Exhausted, &features, &diff, false);
            return Ok(self.outcome.as_ref());
        }

        let n = self.portfolio.len();
        let selected = policy
            .select(&Observation { t: self.t, features: &features, diff: &diff })
            .and_then(|i| if i < n { Ok(i) } else { Err(DacError::IndexOutOfRange { index: i, n }) });
        let requested = match selected {
            Ok(i) => i,
            Err(e) => {
                let outcome = Outcome::Aborted { tag: e.outcome_tag().to_string(), reason: e.to_string() };
                self.stop(policy, outcome, &features, &diff, false);
                return Ok(self.outcome.as_ref());
            }
        };

        let nodes = &self.nodes;
        let (used, entry) = self
            .lists
            .select_and_pop(requested, |id| nodes[id].status == NodeStatus::Expanded)?;
        let node = entry.node;

        if self.task.is_goal(&self.nodes[node].state) {
            let plan = self.extract_plan(node);
            let cost = plan.operators.iter().map(|&o| self.task.operator_cost(o)).sum();
            self.stop(policy, Outcome::PlanFound { plan, cost }, &features, &diff, true);
            return Ok(self.outcome.as_ref());
        }

        self.nodes[node].status = NodeStatus::Expanded;
        let h_values = std::mem::take(&mut self.nodes[node].h_values);
        self.lists.remove_from_stats(&h_values);
        self.nodes[node].h_values = h_values;
        let state = self.nodes[node].state.clone();
        for (op, succ) in self.task.successors(&state) {
            self.insert_successor(succ, Some(node), Some(op))?;
        }

        self.trace.push(TraceStep {
            t: self.t,
            chosen: used,
            reward: step_reward(),
            diff: match self.trace_mode {
                TraceMode::Full => diff.0,
                TraceMode::ChoicesOnly => Vec::new(),
            },
        });
        self.expansions += 1;
        self.t += 1;
        self.prev_features = Some(features);
        Ok(None)
    }

    pub fn run<P: ControlPolicy + ?Sized>(mut self, policy: &mut P) -> Result<SearchResult, SearchError> {
        while self.step(policy)?.is_none() {}
        Ok(self.into_result())
    }

    pub fn into_result(self) -> SearchResult {
        SearchResult {
            outcome: self.outcome.unwrap_or(Outcome::BudgetExceeded),
            expansions: self.expansions,
            generated: self.generated,
            trace: self.trace,
            wall_time: self.started.elapsed(),
        }
    }
}

/// Runs greedy best-first search to completion under `policy`.
pub fn run_gbfs<T: Task + ?Sized, P: ControlPolicy + ?Sized>(
    task: &T,
    portfolio: &Portfolio<T>,
    policy: &mut P,
    budget: Budget,
) -> Result<SearchResult, SearchError> {
    GbfsSearch::new(task, portfolio, budget)?.run(policy)
}
