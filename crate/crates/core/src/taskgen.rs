//! Task generators: the separation families, a layered white-box domain and
//! a small transport domain.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::heuristics::HeuristicValue;
use crate::task::{ExplicitTask, Fact, Operator, PartialAssignment, Plan, SasTask, State, TaskError};

#[derive(Debug, Error)]
pub enum TaskgenError {
    #[error("n must be at least 4, got {0}")]
    NTooSmall(u32),
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error(transparent)]
    Task(#[from] TaskError),
}

/// Largest supported `n` for the separation families (2^(n-2) states).
pub const MAX_PI_N: u32 = 24;

const S0: usize = 0;
const S1: usize = 1;
const S2: usize = 2;
const S3: usize = 3;

/// Number of trap states below `s3`, chosen so that a policy that falls into
/// the trap expands exactly `2^(n-2)` states before popping the goal.
pub fn pi_cluster_size(n: u32) -> usize {
    (1usize << (n - 2)) - 3
}

fn check_n(n: u32) -> Result<(), TaskgenError> {
    if n < 4 {
        return Err(TaskgenError::NTooSmall(n));
    }
    if n > MAX_PI_N {
        return Err(TaskgenError::InvalidParameters(format!("n = {n} exceeds {MAX_PI_N}")));
    }
    Ok(())
}

fn pi_base(n: u32, extra: usize, swap: bool) -> Result<ExplicitTask, TaskgenError> {
    check_n(n)?;
    let cluster = pi_cluster_size(n);
    let total = 4 + cluster + extra;
    let mut task = ExplicitTask::new(total, S0, [S2].into_iter().collect())?;
    task.add_arc(S0, "o1", 1, S1)?;
    task.add_arc(S1, "o2", 1, S2)?;
    task.add_arc(S0, "o3", 1, S3)?;
    let (h0, h1) = if swap { (1, 0) } else { (0, 1) };
    for (s, a, b) in [(S0, 5, 6), (S1, 5, 3), (S2, 0, 0), (S3, 3, 4)] {
        task.set_heuristic(h0, s, HeuristicValue::Finite(a))?;
        task.set_heuristic(h1, s, HeuristicValue::Finite(b))?;
    }
    for k in 4..4 + cluster {
        task.add_arc(S3, format!("o{k}"), 1, k)?;
        task.set_heuristic(h0, k, HeuristicValue::Finite(1))?;
        task.set_heuristic(h1, k, HeuristicValue::Finite(1))?;
    }
    Ok(task)
}

/// The family where choosing by lowest mean solves in two expansions while
/// any fixed heuristic or alternation picking `h0` at step 1 falls into the
/// trap below `s3`.
pub fn gen_pi_n(n: u32) -> Result<ExplicitTask, TaskgenError> {
    pi_base(n, 0, false)
}

/// [`gen_pi_n`] with the two heuristic tables exchanged; the adversarial
/// instance for policies that pick `h1` at step 1.
pub fn gen_pi_n_swapped(n: u32) -> Result<ExplicitTask, TaskgenError> {
    pi_base(n, 0, true)
}

/// [`gen_pi_n`] with an extra state `s'` between `s1` and `s2`. `s'` is the
/// last state index.
pub fn gen_pi_prime_n(n: u32) -> Result<ExplicitTask, TaskgenError> {
    let base = pi_base(n, 1, false)?;
    let sp = base.num_states() - 1;
    // rebuild so o2 leads s1 -> s' and a new arc s' -> s2 follows
    let mut task = ExplicitTask::new(base.num_states(), S0, [S2].into_iter().collect())?;
    for arc in base.arcs() {
        let dst = if arc.src == S1 && arc.dst == S2 { sp } else { arc.dst };
        task.add_arc(arc.src, arc.label.clone(), arc.cost, dst)?;
    }
    task.add_arc(sp, "o'", 1, S2)?;
    for h in 0..2 {
        for s in 0..sp {
            let v = base.table(h).expect("two tables")[s].expect("base table is total");
            task.set_heuristic(h, s, v)?;
        }
    }
    task.set_heuristic(0, sp, HeuristicValue::Finite(2))?;
    task.set_heuristic(1, sp, HeuristicValue::Finite(10))?;
    Ok(task)
}

/// A layered task where at each layer exactly one of two heuristics ranks
/// the on-path successor first.
#[derive(Debug, Clone)]
pub struct ArtificialTask {
    pub task: ExplicitTask,
    /// `informative[i]` is the heuristic that is informative for layer `i`.
    pub informative: Vec<usize>,
}

impl ArtificialTask {
    /// Selection sequence that expands exactly the path states: at step `t`
    /// the successor generated by layer `t-1` must be popped.
    pub fn witness(&self) -> Vec<usize> {
        let mut script = vec![self.informative[0]];
        script.extend(&self.informative);
        script
    }

    pub fn depth(&self) -> usize {
        self.informative.len()
    }
}

/// Path states are `0..=depth` (goal `depth`); the distractors of layer `i`
/// follow as `depth + 1 + i * branching + j`.
pub fn gen_artificial(depth: usize, branching: usize, seed: u64) -> Result<ArtificialTask, TaskgenError> {
    if depth == 0 || branching < 2 {
        return Err(TaskgenError::InvalidParameters("need depth >= 1 and branching >= 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let informative: Vec<usize> = (0..depth).map(|_| rng.gen_range(0..2)).collect();
    let num_states = depth + 1 + depth * branching;
    let mut task = ExplicitTask::new(num_states, 0, [depth].into_iter().collect())?;
    let big = 2 * depth as u64 + 2;
    let fin = HeuristicValue::Finite;

    for h in 0..2 {
        task.set_heuristic(h, 0, fin(big + 2 * depth as u64))?;
    }
    for (i, &good) in informative.iter().enumerate() {
        let bad = 1 - good;
        let r = (depth - i - 1) as u64;
        let next = i + 1;
        task.add_arc(i, format!("step{i}"), 1, next)?;
        task.set_heuristic(good, next, fin(2 * r))?;
        task.set_heuristic(bad, next, fin(big + 2 * r))?;
        for j in 0..branching {
            let d = depth + 1 + i * branching + j;
            task.add_arc(i, format!("detour{i}_{j}"), 1, d)?;
            task.add_arc(d, format!("back{i}_{j}"), 1, next)?;
            task.set_heuristic(good, d, fin(big + 2 * r + 1))?;
            task.set_heuristic(bad, d, fin(2 * r + 1))?;
        }
    }
    Ok(ArtificialTask { task, informative })
}

/// A transport task together with a plan that solves it.
#[derive(Debug, Clone)]
pub struct TransportTask {
    pub task: SasTask,
    pub witness: Plan,
}

/// One truck moving packages between fully connected locations. Variable 0
/// is the truck; variable `1 + p` is package `p`, whose value
/// `locations` means "in the truck".
pub fn gen_transport(locations: usize, packages: usize, seed: u64) -> Result<TransportTask, TaskgenError> {
    if locations == 0 || packages == 0 {
        return Err(TaskgenError::InvalidParameters("need at least one location and one package".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let in_truck = locations;
    let mut domains = vec![locations];
    domains.extend(std::iter::repeat(locations + 1).take(packages));

    let mut ops = Vec::new();
    let mut move_id = vec![vec![usize::MAX; locations]; locations];
    for a in 0..locations {
        for b in 0..locations {
            if a != b {
                move_id[a][b] = ops.len();
                ops.push(Operator::new(
                    format!("move-l{a}-l{b}"),
                    PartialAssignment::new(vec![Fact::new(0, a)])?,
                    PartialAssignment::new(vec![Fact::new(0, b)])?,
                    1,
                )?);
            }
        }
    }
    let mut load_id = vec![vec![0; locations]; packages];
    let mut unload_id = vec![vec![0; locations]; packages];
    for p in 0..packages {
        let var = 1 + p;
        for l in 0..locations {
            load_id[p][l] = ops.len();
            ops.push(Operator::new(
                format!("load-p{p}-l{l}"),
                PartialAssignment::new(vec![Fact::new(0, l), Fact::new(var, l)])?,
                PartialAssignment::new(vec![Fact::new(var, in_truck)])?,
                1,
            )?);
            unload_id[p][l] = ops.len();
            ops.push(Operator::new(
                format!("unload-p{p}-l{l}"),
                PartialAssignment::new(vec![Fact::new(0, l), Fact::new(var, in_truck)])?,
                PartialAssignment::new(vec![Fact::new(var, l)])?,
                1,
            )?);
        }
    }

    let truck = rng.gen_range(0..locations);
    let start: Vec<usize> = (0..packages).map(|_| rng.gen_range(0..locations)).collect();
    let target: Vec<usize> = (0..packages).map(|_| rng.gen_range(0..locations)).collect();
    let mut init = vec![truck];
    init.extend(&start);
    let goal = PartialAssignment::new((0..packages).map(|p| Fact::new(1 + p, target[p])).collect())?;
    let task = SasTask::new(domains, State::from_values(&init), ops, goal)?;

    let mut plan = Vec::new();
    let mut at = truck;
    let mut drive = |plan: &mut Vec<usize>, to: usize| {
        if at != to {
            plan.push(move_id[at][to]);
            at = to;
        }
    };
    for p in 0..packages {
        if start[p] == target[p] {
            continue;
        }
        drive(&mut plan, start[p]);
        plan.push(load_id[p][start[p]]);
        drive(&mut plan, target[p]);
        plan.push(unload_id[p][target[p]]);
    }
    Ok(TransportTask { task, witness: Plan::new(plan) })
}

/// Shape of random SAS+ tasks used by tests and stress checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomSasParams {
    pub variables: usize,
    pub max_domain: usize,
    pub operators: usize,
    pub max_precondition: usize,
    pub max_effect: usize,
    pub goal_size: usize,
    pub max_cost: u64,
}

impl Default for RandomSasParams {
    fn default() -> Self {
        Self { variables: 4, max_domain: 3, operators: 8, max_precondition: 2, max_effect: 2, goal_size: 2, max_cost: 3 }
    }
}

fn random_assignment(rng: &mut ChaCha8Rng, domains: &[usize], size: usize) -> Result<PartialAssignment, TaskError> {
    let mut vars: Vec<usize> = (0..domains.len()).collect();
    vars.shuffle(rng);
    let facts = vars.into_iter().take(size).map(|v| Fact::new(v, rng.gen_range(0..domains[v]))).collect();
    PartialAssignment::new(facts)
}

/// A uniformly random task of the given shape. Costs are drawn from
/// `1..=max_cost` (`max_cost = 0` gives zero-cost operators).
pub fn gen_random_sas(params: &RandomSasParams, seed: u64) -> Result<SasTask, TaskgenError> {
    let p = params;
    if p.variables == 0 || p.max_domain < 2 || p.max_effect == 0 || p.goal_size == 0 {
        return Err(TaskgenError::InvalidParameters("random task shape is degenerate".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let domains: Vec<usize> = (0..p.variables).map(|_| rng.gen_range(2..=p.max_domain)).collect();
    let init: Vec<usize> = domains.iter().map(|&d| rng.gen_range(0..d)).collect();
    let mut ops = Vec::with_capacity(p.operators);
    for i in 0..p.operators {
        let pre_len = rng.gen_range(0..=p.max_precondition.min(p.variables));
        let eff_len = rng.gen_range(1..=p.max_effect.min(p.variables));
        let pre = random_assignment(&mut rng, &domains, pre_len)?;
        let eff = random_assignment(&mut rng, &domains, eff_len)?;
        let cost = if p.max_cost == 0 { 0 } else { rng.gen_range(1..=p.max_cost) };
        ops.push(Operator::new(format!("op{i}"), pre, eff, cost)?);
    }
    let goal = random_assignment(&mut rng, &domains, p.goal_size.min(p.variables))?;
    Ok(SasTask::new(domains, State::from_values(&init), ops, goal)?)
}
