//! Planning task representation.
//!
//! Two backends share the [`Task`] abstraction: finite-domain [`SasTask`]s
//! with operators over partial assignments, and [`ExplicitTask`]s given as a
//! labelled transition graph with per-state heuristic tables.

mod explicit;
mod format;
mod sas;

use std::fmt::Debug;
use std::hash::Hash;

use thiserror::Error;

pub use explicit::{Arc, ExplicitTask};
pub use format::{parse_any_task, parse_explicit_task, parse_task, serialize_explicit_task, serialize_task, AnyTask};
pub use sas::{Fact, Operator, PartialAssignment, SasTask, State};

/// Index of an operator (SAS+) or arc (explicit graph).
pub type OperatorId = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TaskError {
    #[error("operator {0} is not applicable")]
    InapplicableOperator(OperatorId),
    #[error("unknown operator {0}")]
    UnknownOperator(OperatorId),
    #[error("plan step {index} (operator {operator}) is not applicable")]
    StepInapplicable { index: usize, operator: OperatorId },
    #[error("plan does not reach a goal state")]
    GoalNotReached,
    #[error("syntax error on line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("semantic error: {0}")]
    Semantic(String),
}

/// The search-facing view of a planning task.
pub trait Task {
    type State: Clone + Eq + Hash + Debug;

    fn initial_state(&self) -> Self::State;

    fn is_goal(&self, state: &Self::State) -> bool;

    /// Applicable operators and their successor states, in operator order.
    fn successors(&self, state: &Self::State) -> Vec<(OperatorId, Self::State)>;

    fn apply_operator(&self, op: OperatorId, state: &Self::State) -> Result<Self::State, TaskError>;

    fn operator_cost(&self, op: OperatorId) -> u64;

    fn operator_name(&self, op: OperatorId) -> &str;
}

/// An ordered sequence of operators.
#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Plan {
    pub operators: Vec<OperatorId>,
}

impl Plan {
    pub fn new(operators: Vec<OperatorId>) -> Self {
        Self { operators }
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }
}

/// Executes `plan` from the initial state and returns its total cost if it
/// ends in a goal state.
pub fn validate_plan<T: Task + ?Sized>(task: &T, plan: &Plan) -> Result<u64, TaskError> {
    let mut state = task.initial_state();
    let mut cost = 0u64;
    for (index, &op) in plan.operators.iter().enumerate() {
        state = task.apply_operator(op, &state).map_err(|e| match e {
            TaskError::InapplicableOperator(_) | TaskError::UnknownOperator(_) => {
                TaskError::StepInapplicable { index, operator: op }
            }
            other => other,
        })?;
        cost = cost.saturating_add(task.operator_cost(op));
    }
    if task.is_goal(&state) {
        Ok(cost)
    } else {
        Err(TaskError::GoalNotReached)
    }
}
