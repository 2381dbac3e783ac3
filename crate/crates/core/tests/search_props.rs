mod common;

use std::collections::HashSet;

use common::{reachable_states, small_random_task, stats_from_nodes};
use dacplan_core::dac::{build_policy, ControlPolicy, DacError, Observation, PolicySpec, RandomPolicy};
use dacplan_core::heuristics::Portfolio;
use dacplan_core::search::{run_gbfs, Budget, GbfsSearch, NodeStatus, Outcome};
use dacplan_core::task::{validate_plan, Task};
use dacplan_core::taskgen::gen_transport;
use proptest::prelude::*;

/// Returns whatever index it is told, valid or not.
struct Wild(Vec<usize>, usize);

impl ControlPolicy for Wild {
    fn select(&mut self, _: &Observation<'_>) -> Result<usize, DacError> {
        self.1 += 1;
        Ok(self.0[(self.1 - 1) % self.0.len()])
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn incremental_stats_match_recomputation(seed in 0u64..1_000_000, policy_seed in any::<u64>()) {
        let task = small_random_task(seed, false);
        let portfolio = Portfolio::sas_default(&task);
        let mut policy = RandomPolicy::new(policy_seed, portfolio.len());
        let mut search = GbfsSearch::new(&task, &portfolio, Budget::expansions(500)).unwrap();
        loop {
            let oracle = stats_from_nodes(&search, portfolio.len());
            prop_assert_eq!(search.open_lists().stats(), &oracle[..]);
            prop_assert_eq!(search.recomputed_stats(), oracle);
            if search.step(&mut policy).unwrap().is_some() {
                break;
            }
        }
    }

    #[test]
    fn runs_are_sound_and_deterministic(seed in 0u64..1_000_000, spec_idx in 0usize..6) {
        let task = small_random_task(seed, false);
        let portfolio = Portfolio::sas_default(&task);
        let spec: PolicySpec = ["single:0", "single:3", "alt:0123", "alt:3120", "argmin-mu", "rnd:9"][spec_idx].parse().unwrap();
        let run = || {
            let mut p = build_policy(&spec, 4).unwrap();
            let mut search = GbfsSearch::new(&task, &portfolio, Budget::unlimited()).unwrap();
            while search.step(&mut p).unwrap().is_none() {}
            let expanded: Vec<_> = search
                .nodes()
                .iter()
                .filter(|n| n.status == NodeStatus::Expanded)
                .map(|n| n.state.clone())
                .collect();
            (expanded, search.into_result())
        };
        let (expanded, a) = run();
        let (_, b) = run();
        prop_assert_eq!(&a.outcome, &b.outcome);
        prop_assert_eq!(&a.trace, &b.trace);
        prop_assert_eq!(a.expansions, b.expansions);
        prop_assert_eq!(a.generated, b.generated);

        let distinct: HashSet<_> = expanded.iter().cloned().collect();
        prop_assert_eq!(distinct.len(), expanded.len());
        prop_assert_eq!(expanded.len() as u64, a.expansions);
        let reachable = reachable_states(&task, 1_000_000).unwrap();
        prop_assert!(a.expansions as usize <= reachable.len());
        prop_assert_eq!(a.trace.len() as u64, a.expansions);
        prop_assert!(a.trace.iter().all(|s| s.reward == -1.0));

        match &a.outcome {
            Outcome::PlanFound { plan, cost } => prop_assert_eq!(validate_plan(&task, plan).unwrap(), *cost),
            // without a budget an unsolved search must have seen everything
            // reachable through finite-valued states
            other => prop_assert_eq!(other, &Outcome::Exhausted),
        }
    }

    #[test]
    fn search_survives_any_policy_output(seed in 0u64..1_000_000, picks in prop::collection::vec(0usize..8, 1..6)) {
        let task = small_random_task(seed, false);
        let portfolio = Portfolio::sas_default(&task);
        let mut policy = Wild(picks.clone(), 0);
        let result = run_gbfs(&task, &portfolio, &mut policy, Budget::expansions(200)).unwrap();
        if picks.iter().take(result.expansions as usize + 1).any(|&p| p >= 4) {
            prop_assert_eq!(result.outcome.tag(), "protocol-error");
        }
    }

    #[test]
    fn transport_plans_validate(locations in 1usize..4, packages in 1usize..4, seed in any::<u64>()) {
        let t = gen_transport(locations, packages, seed).unwrap();
        let portfolio = Portfolio::sas_default(&t.task);
        for spec in ["single:0", "alt:0123", "argmin-mu"] {
            let mut p = build_policy(&spec.parse().unwrap(), 4).unwrap();
            let r = run_gbfs(&t.task, &portfolio, &mut p, Budget::unlimited()).unwrap();
            let plan = r.outcome.plan().expect("transport tasks are solvable");
            validate_plan(&t.task, plan).unwrap();
            prop_assert!(t.task.is_goal(t.task.initial()) == plan.is_empty());
        }
    }
}
