//! Heuristic evaluators and portfolios.

mod perfect;
mod relaxation;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use perfect::h_perfect;
pub use relaxation::Relaxation;

use crate::task::{ExplicitTask, SasTask, State, Task};

/// A heuristic estimate: a non-negative integer or infinity (dead end).
///
/// The derived ordering places every finite value below [`HeuristicValue::Infinite`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum HeuristicValue {
    Finite(u64),
    Infinite,
}

impl HeuristicValue {
    pub const ZERO: Self = Self::Finite(0);

    pub fn is_finite(self) -> bool {
        matches!(self, Self::Finite(_))
    }

    pub fn finite(self) -> Option<u64> {
        match self {
            Self::Finite(v) => Some(v),
            Self::Infinite => None,
        }
    }

    /// Addition where infinity absorbs everything.
    pub fn saturating_add(self, other: Self) -> Self {
        match (self, other) {
            (Self::Finite(a), Self::Finite(b)) => Self::Finite(a.saturating_add(b)),
            _ => Self::Infinite,
        }
    }
}

impl From<Option<u64>> for HeuristicValue {
    fn from(value: Option<u64>) -> Self {
        value.map_or(Self::Infinite, Self::Finite)
    }
}

impl fmt::Display for HeuristicValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Finite(v) => write!(f, "{v}"),
            Self::Infinite => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HeuristicError {
    #[error("heuristic table {heuristic} has no entry for state {state}")]
    MissingEntry { heuristic: usize, state: usize },
    #[error("state space budget of {0} states exceeded")]
    BudgetExceeded(usize),
    #[error("unknown heuristic `{0}`")]
    UnknownName(String),
    #[error("heuristic `{name}` is not available for {kind} tasks")]
    NotApplicable { name: String, kind: &'static str },
    #[error("portfolio must contain at least one heuristic")]
    EmptyPortfolio,
}

/// A state evaluator for tasks of type `T`.
pub trait Heuristic<T: Task + ?Sized>: Send + Sync {
    fn name(&self) -> &str;

    fn evaluate(&self, task: &T, state: &T::State) -> Result<HeuristicValue, HeuristicError>;
}

/// Heuristic names accepted on the command line and in configs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HeuristicName {
    Ff,
    GoalCount,
    HMax,
    HAdd,
    Tabular(usize),
}

impl FromStr for HeuristicName {
    type Err = HeuristicError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "ff" => Ok(Self::Ff),
            "goalcount" => Ok(Self::GoalCount),
            "hmax" => Ok(Self::HMax),
            "hadd" => Ok(Self::HAdd),
            other => other
                .strip_prefix("tabular:")
                .and_then(|i| i.parse().ok())
                .map(Self::Tabular)
                .ok_or_else(|| HeuristicError::UnknownName(s.to_string())),
        }
    }
}

impl fmt::Display for HeuristicName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Ff => f.write_str("ff"),
            Self::GoalCount => f.write_str("goalcount"),
            Self::HMax => f.write_str("hmax"),
            Self::HAdd => f.write_str("hadd"),
            Self::Tabular(i) => write!(f, "tabular:{i}"),
        }
    }
}

/// Parses a comma-separated list such as `ff,goalcount,hmax,hadd`.
pub fn parse_heuristic_list(s: &str) -> Result<Vec<HeuristicName>, HeuristicError> {
    let names = s
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(str::parse)
        .collect::<Result<Vec<_>, _>>()?;
    if names.is_empty() {
        return Err(HeuristicError::EmptyPortfolio);
    }
    Ok(names)
}

/// Number of goal facts not satisfied in `state`.
pub fn h_goalcount(task: &SasTask, state: &State) -> HeuristicValue {
    let unsatisfied = task
        .goal()
        .facts()
        .iter()
        .filter(|f| state.value(f.var) != f.value)
        .count();
    HeuristicValue::Finite(unsatisfied as u64)
}

/// Looks up `state` in table `heuristic` of an explicit task.
pub fn h_tabular(task: &ExplicitTask, heuristic: usize, state: usize) -> Result<HeuristicValue, HeuristicError> {
    task.table(heuristic)
        .and_then(|t| t.get(state).copied().flatten())
        .ok_or(HeuristicError::MissingEntry { heuristic, state })
}

pub struct GoalCount;

impl Heuristic<SasTask> for GoalCount {
    fn name(&self) -> &str {
        "goalcount"
    }

    fn evaluate(&self, task: &SasTask, state: &State) -> Result<HeuristicValue, HeuristicError> {
        Ok(h_goalcount(task, state))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RelaxedKind {
    Max,
    Add,
    Ff,
}

/// Delete-relaxation heuristic backed by a precomputed [`Relaxation`].
pub struct RelaxedHeuristic {
    relaxation: Arc<Relaxation>,
    kind: RelaxedKind,
}

impl RelaxedHeuristic {
    pub fn hmax(relaxation: Arc<Relaxation>) -> Self {
        Self { relaxation, kind: RelaxedKind::Max }
    }

    pub fn hadd(relaxation: Arc<Relaxation>) -> Self {
        Self { relaxation, kind: RelaxedKind::Add }
    }

    pub fn ff(relaxation: Arc<Relaxation>) -> Self {
        Self { relaxation, kind: RelaxedKind::Ff }
    }
}

impl Heuristic<SasTask> for RelaxedHeuristic {
    fn name(&self) -> &str {
        match self.kind {
            RelaxedKind::Max => "hmax",
            RelaxedKind::Add => "hadd",
            RelaxedKind::Ff => "ff",
        }
    }

    fn evaluate(&self, _task: &SasTask, state: &State) -> Result<HeuristicValue, HeuristicError> {
        Ok(match self.kind {
            RelaxedKind::Max => self.relaxation.h_max(state),
            RelaxedKind::Add => self.relaxation.h_add(state),
            RelaxedKind::Ff => self.relaxation.h_ff(state),
        })
    }
}

/// Table lookup for explicit tasks.
pub struct Tabular {
    index: usize,
    name: String,
}

impl Tabular {
    pub fn new(index: usize) -> Self {
        Self { index, name: format!("tabular:{index}") }
    }
}

impl Heuristic<ExplicitTask> for Tabular {
    fn name(&self) -> &str {
        &self.name
    }

    fn evaluate(&self, task: &ExplicitTask, state: &usize) -> Result<HeuristicValue, HeuristicError> {
        h_tabular(task, self.index, *state)
    }
}

/// The ordered heuristic set; its indices form the controller's action space.
pub struct Portfolio<T: Task + ?Sized> {
    members: Vec<Box<dyn Heuristic<T>>>,
}

impl<T: Task + ?Sized> Portfolio<T> {
    pub fn new(members: Vec<Box<dyn Heuristic<T>>>) -> Result<Self, HeuristicError> {
        if members.is_empty() {
            return Err(HeuristicError::EmptyPortfolio);
        }
        Ok(Self { members })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.members.iter().map(|h| h.name().to_string()).collect()
    }

    pub fn get(&self, index: usize) -> Option<&dyn Heuristic<T>> {
        self.members.get(index).map(Box::as_ref)
    }

    /// Evaluates `state` with every member, in portfolio order.
    pub fn evaluate_all(&self, task: &T, state: &T::State) -> Result<Vec<HeuristicValue>, HeuristicError> {
        self.members.iter().map(|h| h.evaluate(task, state)).collect()
    }
}

impl Portfolio<SasTask> {
    /// `[ff, goalcount, hmax, hadd]`.
    pub fn sas_default(task: &SasTask) -> Self {
        Self::sas(task, &[HeuristicName::Ff, HeuristicName::GoalCount, HeuristicName::HMax, HeuristicName::HAdd])
            .expect("default portfolio is valid")
    }

    pub fn sas(task: &SasTask, names: &[HeuristicName]) -> Result<Self, HeuristicError> {
        let relaxation = Arc::new(Relaxation::new(task));
        let members = names
            .iter()
            .map(|name| -> Result<Box<dyn Heuristic<SasTask>>, HeuristicError> {
                Ok(match name {
                    HeuristicName::Ff => Box::new(RelaxedHeuristic::ff(relaxation.clone())),
                    HeuristicName::GoalCount => Box::new(GoalCount),
                    HeuristicName::HMax => Box::new(RelaxedHeuristic::hmax(relaxation.clone())),
                    HeuristicName::HAdd => Box::new(RelaxedHeuristic::hadd(relaxation.clone())),
                    HeuristicName::Tabular(_) => {
                        return Err(HeuristicError::NotApplicable { name: name.to_string(), kind: "SAS+" })
                    }
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(members)
    }
}

impl Portfolio<ExplicitTask> {
    /// One tabular heuristic per table in the task.
    pub fn tabular_all(task: &ExplicitTask) -> Result<Self, HeuristicError> {
        let names: Vec<_> = (0..task.num_heuristics()).map(HeuristicName::Tabular).collect();
        Self::tabular(task, &names)
    }

    pub fn tabular(task: &ExplicitTask, names: &[HeuristicName]) -> Result<Self, HeuristicError> {
        let members = names
            .iter()
            .map(|name| -> Result<Box<dyn Heuristic<ExplicitTask>>, HeuristicError> {
                match name {
                    HeuristicName::Tabular(i) if *i < task.num_heuristics() => Ok(Box::new(Tabular::new(*i))),
                    HeuristicName::Tabular(_) => Err(HeuristicError::UnknownName(name.to_string())),
                    _ => Err(HeuristicError::NotApplicable { name: name.to_string(), kind: "graph" }),
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(members)
    }
}
