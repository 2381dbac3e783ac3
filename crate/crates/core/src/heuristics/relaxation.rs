//! Delete-relaxation exploration shared by h_max, h_add and the FF heuristic.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::HeuristicValue;
use crate::task::{SasTask, State};

#[derive(Debug, Clone)]
struct RelaxedOperator {
    pre: Vec<usize>,
    eff: Vec<usize>,
    cost: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Combine {
    Max,
    Add,
}

/// Fact-level view of a SAS+ task with delete effects dropped.
///
/// Facts are numbered densely: variable `v` value `d` is `offset[v] + d`.
#[derive(Debug, Clone)]
pub struct Relaxation {
    offsets: Vec<usize>,
    num_facts: usize,
    operators: Vec<RelaxedOperator>,
    /// Operators having the fact as a precondition.
    precondition_of: Vec<Vec<usize>>,
    unconditional: Vec<usize>,
    goal: Vec<usize>,
}

struct Exploration {
    cost: Vec<Option<u64>>,
    supporter: Vec<Option<usize>>,
    /// Position at which each operator became applicable, for plan ordering.
    fired: Vec<Option<usize>>,
}

impl Relaxation {
    pub fn new(task: &SasTask) -> Self {
        let mut offsets = Vec::with_capacity(task.num_variables());
        let mut num_facts = 0;
        for &d in task.domains() {
            offsets.push(num_facts);
            num_facts += d;
        }
        let fact = |f: &crate::task::Fact| offsets[f.var] + f.value;
        let operators: Vec<RelaxedOperator> = task
            .operators()
            .iter()
            .map(|op| RelaxedOperator {
                pre: op.precondition.facts().iter().map(fact).collect(),
                eff: op.effect.facts().iter().map(fact).collect(),
                cost: op.cost,
            })
            .collect();
        let mut precondition_of = vec![Vec::new(); num_facts];
        let mut unconditional = Vec::new();
        for (i, op) in operators.iter().enumerate() {
            if op.pre.is_empty() {
                unconditional.push(i);
            }
            for &p in &op.pre {
                precondition_of[p].push(i);
            }
        }
        let goal = task.goal().facts().iter().map(fact).collect();
        Self { offsets, num_facts, operators, precondition_of, unconditional, goal }
    }

    pub fn num_facts(&self) -> usize {
        self.num_facts
    }

    pub fn fact_id(&self, var: usize, value: usize) -> usize {
        self.offsets[var] + value
    }

    fn explore(&self, state: &State, combine: Combine) -> Exploration {
        let num_ops = self.operators.len();
        let mut cost: Vec<Option<u64>> = vec![None; self.num_facts];
        let mut supporter: Vec<Option<usize>> = vec![None; self.num_facts];
        let mut done = vec![false; self.num_facts];
        let mut fired: Vec<Option<usize>> = vec![None; num_ops];
        let mut remaining: Vec<usize> = self.operators.iter().map(|o| o.pre.len()).collect();
        let mut accumulated = vec![0u64; num_ops];
        let mut heap = BinaryHeap::new();
        let mut fire_count = 0;

        for (var, &value) in state.values().iter().enumerate() {
            let f = self.fact_id(var, value as usize);
            cost[f] = Some(0);
            heap.push(Reverse((0u64, f)));
        }

        let mut fire = |op: usize,
                        base: u64,
                        cost: &mut Vec<Option<u64>>,
                        supporter: &mut Vec<Option<usize>>,
                        done: &Vec<bool>,
                        heap: &mut BinaryHeap<Reverse<(u64, usize)>>| {
            fired[op] = Some(fire_count);
            fire_count += 1;
            let c = base.saturating_add(self.operators[op].cost);
            for &e in &self.operators[op].eff {
                if done[e] {
                    continue;
                }
                match cost[e] {
                    Some(old) if c > old => {}
                    Some(old) if c == old => {
                        if supporter[e].is_some_and(|s| op < s) {
                            supporter[e] = Some(op);
                        }
                    }
                    _ => {
                        cost[e] = Some(c);
                        supporter[e] = Some(op);
                        heap.push(Reverse((c, e)));
                    }
                }
            }
        };

        for &op in &self.unconditional {
            fire(op, 0, &mut cost, &mut supporter, &done, &mut heap);
        }

        while let Some(Reverse((c, f))) = heap.pop() {
            if done[f] || cost[f] != Some(c) {
                continue;
            }
            done[f] = true;
            for &op in &self.precondition_of[f] {
                accumulated[op] = match combine {
                    Combine::Max => accumulated[op].max(c),
                    Combine::Add => accumulated[op].saturating_add(c),
                };
                remaining[op] -= 1;
                if remaining[op] == 0 {
                    fire(op, accumulated[op], &mut cost, &mut supporter, &done, &mut heap);
                }
            }
        }

        Exploration { cost, supporter, fired }
    }

    fn goal_value(&self, exploration: &Exploration, combine: Combine) -> HeuristicValue {
        let mut total = 0u64;
        for &g in &self.goal {
            match exploration.cost[g] {
                None => return HeuristicValue::Infinite,
                Some(c) => {
                    total = match combine {
                        Combine::Max => total.max(c),
                        Combine::Add => total.saturating_add(c),
                    }
                }
            }
        }
        HeuristicValue::Finite(total)
    }

    pub fn h_max(&self, state: &State) -> HeuristicValue {
        self.goal_value(&self.explore(state, Combine::Max), Combine::Max)
    }

    pub fn h_add(&self, state: &State) -> HeuristicValue {
        self.goal_value(&self.explore(state, Combine::Add), Combine::Add)
    }

    /// Relaxed plan from h_add best supporters, ordered so that it is
    /// sequentially applicable under delete-relaxed semantics.
    /// `None` iff some goal fact is relaxed-unreachable.
    pub fn relaxed_plan(&self, state: &State) -> Option<Vec<usize>> {
        let exploration = self.explore(state, Combine::Add);
        let holds = |f: usize| {
            // fact f belongs to the variable whose offset range contains it
            let var = self.offsets.partition_point(|&o| o <= f) - 1;
            self.offsets[var] + state.value(var) == f
        };
        let mut marked = vec![false; self.operators.len()];
        let mut stack: Vec<usize> = Vec::new();
        for &g in &self.goal {
            exploration.cost[g]?;
            stack.push(g);
        }
        let mut seen = vec![false; self.num_facts];
        while let Some(f) = stack.pop() {
            if seen[f] || holds(f) {
                continue;
            }
            seen[f] = true;
            let op = exploration.supporter[f].expect("reached fact outside the state has a supporter");
            if !marked[op] {
                marked[op] = true;
                stack.extend(self.operators[op].pre.iter().copied());
            }
        }
        let mut plan: Vec<usize> = (0..self.operators.len()).filter(|&o| marked[o]).collect();
        plan.sort_by_key(|&o| exploration.fired[o]);
        Some(plan)
    }

    pub fn h_ff(&self, state: &State) -> HeuristicValue {
        match self.relaxed_plan(state) {
            None => HeuristicValue::Infinite,
            Some(plan) => HeuristicValue::Finite(
                plan.iter().fold(0u64, |acc, &o| acc.saturating_add(self.operators[o].cost)),
            ),
        }
    }
}
