mod common;

use std::collections::BTreeSet;

use common::small_random_task;
use dacplan_core::heuristics::HeuristicValue;
use dacplan_core::task::{
    parse_any_task, parse_explicit_task, parse_task, serialize_explicit_task, serialize_task, AnyTask, ExplicitTask,
    Task,
};
use dacplan_core::taskgen::{gen_artificial, gen_pi_n, gen_pi_prime_n, gen_transport};
use proptest::prelude::*;

fn random_graph(states: usize, arcs: &[(usize, usize, u64)], goals: &[usize], tables: &[Vec<Option<u64>>]) -> ExplicitTask {
    let goals: BTreeSet<usize> = goals.iter().map(|g| g % states).collect();
    let mut t = ExplicitTask::new(states, 0, goals).unwrap();
    for (i, &(a, b, c)) in arcs.iter().enumerate() {
        t.add_arc(a % states, format!("a{i}"), c, b % states).unwrap();
    }
    for (h, table) in tables.iter().enumerate() {
        for s in 0..states {
            let v = table[s % table.len()].map_or(HeuristicValue::Infinite, HeuristicValue::Finite);
            t.set_heuristic(h, s, v).unwrap();
        }
    }
    t
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn apply_is_pure_and_local(seed in 0u64..1_000_000) {
        let task = small_random_task(seed, false);
        let s = task.initial().clone();
        let before = s.clone();
        let succ = task.successors(&s);
        prop_assert_eq!(&s, &before);
        prop_assert!(succ.len() <= task.operators().len());
        for (op, next) in succ {
            prop_assert_eq!(next.len(), task.num_variables());
            let eff_vars: Vec<usize> = task.operators()[op].effect.facts().iter().map(|f| f.var).collect();
            for v in 0..task.num_variables() {
                if !eff_vars.contains(&v) {
                    prop_assert_eq!(next.value(v), s.value(v));
                }
            }
            prop_assert_eq!(task.apply_operator(op, &s).unwrap(), next);
        }
    }

    #[test]
    fn sas_format_round_trips(seed in 0u64..1_000_000) {
        let task = small_random_task(seed, seed % 2 == 0);
        let text = serialize_task(&task);
        let back = parse_task(&text).unwrap();
        prop_assert_eq!(&back, &task);
        prop_assert_eq!(serialize_task(&back), text);
    }

    #[test]
    fn graph_format_round_trips(
        states in 1usize..12,
        arcs in prop::collection::vec((0usize..12, 0usize..12, 0u64..5), 0..20),
        goals in prop::collection::vec(0usize..12, 0..3),
        tables in prop::collection::vec(prop::collection::vec(prop::option::weighted(0.9, 0u64..50), 1..12), 0..3),
    ) {
        let task = random_graph(states, &arcs, &goals, &tables);
        let text = serialize_explicit_task(&task);
        let back = parse_explicit_task(&text).unwrap();
        prop_assert_eq!(&back, &task);
        match parse_any_task(&text).unwrap() {
            AnyTask::Graph(g) => prop_assert_eq!(g, task),
            AnyTask::Sas(_) => prop_assert!(false, "graph parsed as SAS+"),
        }
    }
}

#[test]
fn generated_tasks_round_trip() {
    for n in [4, 7, 10] {
        for t in [gen_pi_n(n).unwrap(), gen_pi_prime_n(n).unwrap()] {
            assert_eq!(parse_explicit_task(&serialize_explicit_task(&t)).unwrap(), t);
        }
    }
    let a = gen_artificial(10, 3, 4).unwrap();
    assert_eq!(parse_explicit_task(&serialize_explicit_task(&a.task)).unwrap(), a.task);
    let tr = gen_transport(3, 2, 5).unwrap();
    assert_eq!(parse_task(&serialize_task(&tr.task)).unwrap(), tr.task);
}

#[test]
fn pi_family_closed_forms() {
    for n in 4..=16u32 {
        let t = gen_pi_n(n).unwrap();
        assert_eq!(t.goals().len(), 1);
        let cluster = t.successors(&3).len();
        assert_eq!(t.num_states(), 4 + cluster);
        assert_eq!(cluster + 3, 1 << (n - 2));
        for h in 0..2 {
            assert!(t.table(h).unwrap().iter().all(|v| matches!(v, Some(HeuristicValue::Finite(_)))));
        }
    }
}
