use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{OperatorId, Task, TaskError};
use crate::heuristics::HeuristicValue;

/// A labelled transition `src --label/cost--> dst`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arc {
    pub src: usize,
    pub label: String,
    pub cost: u64,
    pub dst: usize,
}

/// A task given directly as its transition system, with tabular heuristics.
///
/// Operators are arcs; an arc id is its position in [`ExplicitTask::arcs`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplicitTask {
    num_states: usize,
    initial: usize,
    goals: BTreeSet<usize>,
    arcs: Vec<Arc>,
    outgoing: Vec<Vec<usize>>,
    /// `tables[h][state]`; `None` marks a missing entry.
    tables: Vec<Vec<Option<HeuristicValue>>>,
}

impl ExplicitTask {
    pub fn new(num_states: usize, initial: usize, goals: BTreeSet<usize>) -> Result<Self, TaskError> {
        if num_states == 0 {
            return Err(TaskError::Semantic("graph needs at least one state".into()));
        }
        if initial >= num_states {
            return Err(TaskError::Semantic(format!("initial state {initial} out of range")));
        }
        if let Some(g) = goals.iter().find(|&&g| g >= num_states) {
            return Err(TaskError::Semantic(format!("goal state {g} out of range")));
        }
        Ok(Self {
            num_states,
            initial,
            goals,
            arcs: Vec::new(),
            outgoing: vec![Vec::new(); num_states],
            tables: Vec::new(),
        })
    }

    pub fn add_arc(&mut self, src: usize, label: impl Into<String>, cost: u64, dst: usize) -> Result<OperatorId, TaskError> {
        if src >= self.num_states || dst >= self.num_states {
            return Err(TaskError::Semantic(format!("arc {src}->{dst} references an unknown state")));
        }
        let id = self.arcs.len();
        self.arcs.push(Arc { src, label: label.into(), cost, dst });
        self.outgoing[src].push(id);
        Ok(id)
    }

    pub fn set_heuristic(&mut self, heuristic: usize, state: usize, value: HeuristicValue) -> Result<(), TaskError> {
        if state >= self.num_states {
            return Err(TaskError::Semantic(format!("heuristic entry for unknown state {state}")));
        }
        if self.tables.len() <= heuristic {
            self.tables.resize(heuristic + 1, vec![None; self.num_states]);
        }
        self.tables[heuristic][state] = Some(value);
        Ok(())
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn goals(&self) -> &BTreeSet<usize> {
        &self.goals
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn outgoing(&self, state: usize) -> &[usize] {
        &self.outgoing[state]
    }

    pub fn num_heuristics(&self) -> usize {
        self.tables.len()
    }

    pub fn table(&self, heuristic: usize) -> Option<&[Option<HeuristicValue>]> {
        self.tables.get(heuristic).map(Vec::as_slice)
    }

    /// First arc id from `src` to `dst`, if any.
    pub fn find_arc(&self, src: usize, dst: usize) -> Option<OperatorId> {
        self.outgoing.get(src)?.iter().copied().find(|&a| self.arcs[a].dst == dst)
    }
}

impl Task for ExplicitTask {
    type State = usize;

    fn initial_state(&self) -> usize {
        self.initial
    }

    fn is_goal(&self, state: &usize) -> bool {
        self.goals.contains(state)
    }

    fn successors(&self, state: &usize) -> Vec<(OperatorId, usize)> {
        self.outgoing[*state].iter().map(|&a| (a, self.arcs[a].dst)).collect()
    }

    fn apply_operator(&self, op: OperatorId, state: &usize) -> Result<usize, TaskError> {
        let arc = self.arcs.get(op).ok_or(TaskError::UnknownOperator(op))?;
        if arc.src != *state {
            return Err(TaskError::InapplicableOperator(op));
        }
        Ok(arc.dst)
    }

    fn operator_cost(&self, op: OperatorId) -> u64 {
        self.arcs[op].cost
    }

    fn operator_name(&self, op: OperatorId) -> &str {
        &self.arcs[op].label
    }
}
