#![allow(dead_code)]

use std::collections::{HashSet, VecDeque};

use dacplan_core::heuristics::HeuristicValue;
use dacplan_core::search::{GbfsSearch, NodeStatus, OpenListStats};
use dacplan_core::task::{SasTask, State, Task};
use dacplan_core::taskgen::{gen_random_sas, RandomSasParams};

#[derive(Clone, Copy, PartialEq, Eq)]
pub enum Combine {
    Sum,
    Max,
}

/// Delete-relaxed fact costs by naive value iteration until nothing changes.
/// `None` is unreachable.
pub fn naive_relaxed(task: &SasTask, state: &State, combine: Combine) -> Option<u64> {
    let domains = task.domains();
    let mut cost: Vec<Vec<Option<u64>>> = domains.iter().map(|&d| vec![None; d]).collect();
    for (v, &val) in state.values().iter().enumerate() {
        cost[v][val as usize] = Some(0);
    }
    let agg = |costs: &mut dyn Iterator<Item = Option<u64>>| -> Option<u64> {
        let mut acc = 0u64;
        for c in costs {
            let c = c?;
            acc = match combine {
                Combine::Sum => acc + c,
                Combine::Max => acc.max(c),
            };
        }
        Some(acc)
    };
    loop {
        let mut changed = false;
        for op in task.operators() {
            let pre = agg(&mut op.precondition.facts().iter().map(|f| cost[f.var][f.value]));
            let Some(pre) = pre else { continue };
            let through = pre + op.cost;
            for f in op.effect.facts() {
                if cost[f.var][f.value].is_none_or(|c| through < c) {
                    cost[f.var][f.value] = Some(through);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    agg(&mut task.goal().facts().iter().map(|f| cost[f.var][f.value]))
}

pub fn to_option(h: HeuristicValue) -> Option<u64> {
    h.finite()
}

/// Applies `plan` under delete-relaxed semantics and checks it reaches the goal.
pub fn relaxed_plan_valid(task: &SasTask, state: &State, plan: &[usize]) -> bool {
    let mut facts: HashSet<(usize, usize)> =
        state.values().iter().enumerate().map(|(v, &x)| (v, x as usize)).collect();
    for &o in plan {
        let op = &task.operators()[o];
        if !op.precondition.facts().iter().all(|f| facts.contains(&(f.var, f.value))) {
            return false;
        }
        facts.extend(op.effect.facts().iter().map(|f| (f.var, f.value)));
    }
    task.goal().facts().iter().all(|f| facts.contains(&(f.var, f.value)))
}

/// All states reachable from the initial state, or `None` past `limit`.
pub fn reachable_states<T: Task>(task: &T, limit: usize) -> Option<HashSet<T::State>> {
    let mut seen = HashSet::new();
    let mut queue = VecDeque::new();
    seen.insert(task.initial_state());
    queue.push_back(task.initial_state());
    while let Some(s) = queue.pop_front() {
        for (_, succ) in task.successors(&s) {
            if seen.insert(succ.clone()) {
                if seen.len() > limit {
                    return None;
                }
                queue.push_back(succ);
            }
        }
    }
    Some(seen)
}

/// Statistics over the open, non-expanded nodes, built from scratch.
pub fn stats_from_nodes<T: Task + ?Sized>(search: &GbfsSearch<'_, T>, n: usize) -> Vec<OpenListStats> {
    let mut stats = vec![OpenListStats::default(); n];
    for node in search.nodes().iter().filter(|nd| nd.status == NodeStatus::Open) {
        for (h, v) in node.h_values.iter().enumerate() {
            if let HeuristicValue::Finite(x) = v {
                stats[h].insert(*x);
            }
        }
    }
    stats
}

/// Small random tasks whose reachable part stays tiny.
pub fn small_random_task(seed: u64, unit_cost: bool) -> SasTask {
    let params = RandomSasParams {
        variables: 3 + (seed % 3) as usize,
        max_domain: 3,
        operators: 6 + (seed % 7) as usize,
        max_precondition: 2,
        max_effect: 2,
        goal_size: 1 + (seed % 2) as usize,
        max_cost: if unit_cost { 1 } else { 4 },
    };
    gen_random_sas(&params, seed).expect("valid shape")
}

/// Worst per-parameter relative error between the analytic TD-loss gradient
/// and central differences, for a random net and batch drawn from `seed`.
/// Entries where both gradients are below `1e-7` in magnitude are compared
/// absolutely.
pub fn gradient_check(seed: u64) -> f64 {
    use dacplan_core::rl::Mlp;
    use rand::{Rng, SeedableRng};

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let inputs = rng.gen_range(2..12);
    let outputs = rng.gen_range(2..5);
    let hidden: Vec<usize> = (0..rng.gen_range(1..3)).map(|_| rng.gen_range(3..10)).collect();
    let sizes: Vec<usize> = std::iter::once(inputs).chain(hidden).chain(std::iter::once(outputs)).collect();
    let mut net = Mlp::random(&sizes, &mut rng).unwrap();
    // random biases too, so no pre-activation sits exactly on the ReLU kink
    for p in net.params_mut() {
        *p += rng.gen_range(-0.5..0.5);
    }
    let xs: Vec<Vec<f64>> = (0..rng.gen_range(1..6)).map(|_| (0..inputs).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
    let batch: Vec<(&[f64], usize, f64)> =
        xs.iter().map(|x| (x.as_slice(), rng.gen_range(0..outputs), rng.gen_range(-3.0..3.0))).collect();

    let (_, grad) = net.td_loss_and_gradient(&batch).unwrap();
    let eps = 1e-6;
    let mut worst: f64 = 0.0;
    for i in 0..grad.len() {
        let mut plus = net.clone();
        plus.params_mut()[i] += eps;
        let mut minus = net.clone();
        minus.params_mut()[i] -= eps;
        let numeric =
            (plus.td_loss_and_gradient(&batch).unwrap().0 - minus.td_loss_and_gradient(&batch).unwrap().0) / (2.0 * eps);
        let scale = grad[i].abs().max(numeric.abs());
        let err = if scale < 1e-7 { (grad[i] - numeric).abs() } else { (grad[i] - numeric).abs() / scale };
        worst = worst.max(err);
    }
    worst
}
