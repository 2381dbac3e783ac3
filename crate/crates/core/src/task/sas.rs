use serde::{Deserialize, Serialize};

use super::{OperatorId, Task, TaskError};

/// A variable/value pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Fact {
    pub var: usize,
    pub value: usize,
}

impl Fact {
    pub fn new(var: usize, value: usize) -> Self {
        Self { var, value }
    }
}

/// A consistent set of facts, kept sorted by variable.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PartialAssignment {
    facts: Vec<Fact>,
}

impl PartialAssignment {
    /// Builds an assignment, rejecting two facts on the same variable.
    pub fn new(mut facts: Vec<Fact>) -> Result<Self, TaskError> {
        facts.sort();
        for pair in facts.windows(2) {
            if pair[0].var == pair[1].var {
                return Err(TaskError::Semantic(format!(
                    "variable {} assigned twice in partial assignment",
                    pair[0].var
                )));
            }
        }
        Ok(Self { facts })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn facts(&self) -> &[Fact] {
        &self.facts
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn get(&self, var: usize) -> Option<usize> {
        self.facts
            .binary_search_by_key(&var, |f| f.var)
            .ok()
            .map(|i| self.facts[i].value)
    }

    /// True iff `state` agrees with every fact.
    pub fn satisfied_by(&self, state: &State) -> bool {
        self.facts.iter().all(|f| state.value(f.var) == f.value)
    }
}

/// A complete assignment of values to all variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct State(Vec<u32>);

impl State {
    pub fn new(values: Vec<u32>) -> Self {
        Self(values)
    }

    pub fn from_values(values: &[usize]) -> Self {
        Self(values.iter().map(|&v| v as u32).collect())
    }

    #[inline]
    pub fn value(&self, var: usize) -> usize {
        self.0[var] as usize
    }

    pub fn values(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Operator {
    pub name: String,
    pub precondition: PartialAssignment,
    pub effect: PartialAssignment,
    pub cost: u64,
}

impl Operator {
    pub fn new(
        name: impl Into<String>,
        precondition: PartialAssignment,
        effect: PartialAssignment,
        cost: u64,
    ) -> Result<Self, TaskError> {
        let name = name.into();
        if effect.is_empty() {
            return Err(TaskError::Semantic(format!("operator {name} has an empty effect")));
        }
        Ok(Self { name, precondition, effect, cost })
    }

    pub fn is_applicable(&self, state: &State) -> bool {
        self.precondition.satisfied_by(state)
    }

    /// Applies the effect to a copy of `state`.
    pub fn apply(&self, state: &State) -> Result<State, TaskError> {
        if !self.is_applicable(state) {
            return Err(TaskError::Semantic(format!("operator {} is not applicable", self.name)));
        }
        Ok(self.apply_unchecked(state))
    }

    pub(crate) fn apply_unchecked(&self, state: &State) -> State {
        let mut values = state.0.clone();
        for f in self.effect.facts() {
            values[f.var] = f.value as u32;
        }
        State(values)
    }
}

/// A finite-domain planning task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SasTask {
    domains: Vec<usize>,
    initial: State,
    operators: Vec<Operator>,
    goal: PartialAssignment,
}

impl SasTask {
    pub fn new(
        domains: Vec<usize>,
        initial: State,
        operators: Vec<Operator>,
        goal: PartialAssignment,
    ) -> Result<Self, TaskError> {
        if domains.is_empty() {
            return Err(TaskError::Semantic("task needs at least one variable".into()));
        }
        if let Some(var) = domains.iter().position(|&d| d == 0) {
            return Err(TaskError::Semantic(format!("variable {var} has an empty domain")));
        }
        if initial.len() != domains.len() {
            return Err(TaskError::Semantic(format!(
                "initial state has {} values for {} variables",
                initial.len(),
                domains.len()
            )));
        }
        for (var, (&value, &size)) in initial.values().iter().zip(&domains).enumerate() {
            if value as usize >= size {
                return Err(TaskError::Semantic(format!(
                    "initial value {value} out of range for variable {var} (domain {size})"
                )));
            }
        }
        let check = |what: &str, pa: &PartialAssignment| -> Result<(), TaskError> {
            for f in pa.facts() {
                match domains.get(f.var) {
                    None => {
                        return Err(TaskError::Semantic(format!("{what}: unknown variable {}", f.var)))
                    }
                    Some(&size) if f.value >= size => {
                        return Err(TaskError::Semantic(format!(
                            "{what}: value {} out of range for variable {} (domain {size})",
                            f.value, f.var
                        )))
                    }
                    _ => {}
                }
            }
            Ok(())
        };
        check("goal", &goal)?;
        for op in &operators {
            check(&format!("operator {} precondition", op.name), &op.precondition)?;
            check(&format!("operator {} effect", op.name), &op.effect)?;
            if op.effect.is_empty() {
                return Err(TaskError::Semantic(format!("operator {} has an empty effect", op.name)));
            }
        }
        Ok(Self { domains, initial, operators, goal })
    }

    pub fn domains(&self) -> &[usize] {
        &self.domains
    }

    pub fn num_variables(&self) -> usize {
        self.domains.len()
    }

    pub fn initial(&self) -> &State {
        &self.initial
    }

    pub fn operators(&self) -> &[Operator] {
        &self.operators
    }

    pub fn goal(&self) -> &PartialAssignment {
        &self.goal
    }

    pub fn num_facts(&self) -> usize {
        self.domains.iter().sum()
    }

    /// Number of operators plus number of facts.
    pub fn size(&self) -> usize {
        self.operators.len() + self.num_facts()
    }

    pub fn is_valid_state(&self, state: &State) -> bool {
        state.len() == self.domains.len()
            && state.values().iter().zip(&self.domains).all(|(&v, &d)| (v as usize) < d)
    }
}

impl Task for SasTask {
    type State = State;

    fn initial_state(&self) -> State {
        self.initial.clone()
    }

    fn is_goal(&self, state: &State) -> bool {
        self.goal.satisfied_by(state)
    }

    fn successors(&self, state: &State) -> Vec<(OperatorId, State)> {
        self.operators
            .iter()
            .enumerate()
            .filter(|(_, op)| op.is_applicable(state))
            .map(|(i, op)| (i, op.apply_unchecked(state)))
            .collect()
    }

    fn apply_operator(&self, op: OperatorId, state: &State) -> Result<State, TaskError> {
        let operator = self.operators.get(op).ok_or(TaskError::UnknownOperator(op))?;
        if !operator.is_applicable(state) {
            return Err(TaskError::InapplicableOperator(op));
        }
        Ok(operator.apply_unchecked(state))
    }

    fn operator_cost(&self, op: OperatorId) -> u64 {
        self.operators[op].cost
    }

    fn operator_name(&self, op: OperatorId) -> &str {
        &self.operators[op].name
    }
}
