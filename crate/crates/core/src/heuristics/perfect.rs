use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use super::{HeuristicError, HeuristicValue};
use crate::task::Task;

/// Exact cheapest cost from `state` to any goal state by uniform-cost search.
///
/// Only meant for small tasks; fails once more than `max_states` distinct
/// states have been generated.
pub fn h_perfect<T: Task + ?Sized>(task: &T, state: &T::State, max_states: usize) -> Result<HeuristicValue, HeuristicError> {
    let mut ids: HashMap<T::State, usize> = HashMap::new();
    let mut states: Vec<T::State> = Vec::new();
    let mut dist: Vec<u64> = Vec::new();
    let mut closed: Vec<bool> = Vec::new();
    let mut heap = BinaryHeap::new();

    ids.insert(state.clone(), 0);
    states.push(state.clone());
    dist.push(0);
    closed.push(false);
    heap.push(Reverse((0u64, 0usize)));

    while let Some(Reverse((d, id))) = heap.pop() {
        if closed[id] || d > dist[id] {
            continue;
        }
        closed[id] = true;
        if task.is_goal(&states[id]) {
            return Ok(HeuristicValue::Finite(d));
        }
        for (op, succ) in task.successors(&states[id]) {
            let nd = d.saturating_add(task.operator_cost(op));
            let sid = match ids.get(&succ) {
                Some(&sid) => sid,
                None => {
                    if states.len() >= max_states {
                        return Err(HeuristicError::BudgetExceeded(max_states));
                    }
                    let sid = states.len();
                    ids.insert(succ.clone(), sid);
                    states.push(succ);
                    dist.push(u64::MAX);
                    closed.push(false);
                    sid
                }
            };
            if nd < dist[sid] {
                dist[sid] = nd;
                heap.push(Reverse((nd, sid)));
            }
        }
    }
    Ok(HeuristicValue::Infinite)
}
