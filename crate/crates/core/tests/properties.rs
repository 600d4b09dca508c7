use proptest::prelude::*;

use taskdecomp::compose::parallel_compose;
use taskdecomp::decomposability::decomposability_report;
use taskdecomp::exec::Execution;
use taskdecomp::failure::remains_decomposable;
use taskdecomp::projection::{project_automaton, project_string};
use taskdecomp::relations::bisimilar;
use taskdecomp::scenario::{emit_scenario, parse_scenario};
use taskdecomp::testkit::{
    bounded_language, gen_automaton, gen_decomposable, gen_passive_failure, gen_scenario, GenParams,
};
use taskdecomp::topdown::{verify_team, verify_team_under_failure, ClosedLoop};

fn params(seed: u64, agents: usize) -> GenParams {
    GenParams {
        agent_count: agents,
        ..GenParams::default()
    }
    .with_seed(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generator_is_deterministic(seed in any::<u64>(), agents in 2usize..4) {
        let p = params(seed, agents);
        prop_assert_eq!(gen_scenario(&p).unwrap(), gen_scenario(&p).unwrap());
    }

    #[test]
    fn scenarios_round_trip(seed in any::<u64>(), agents in 2usize..4) {
        let s = gen_scenario(&params(seed, agents)).unwrap();
        let text = emit_scenario(&s);
        let back = parse_scenario(&text).unwrap();
        prop_assert_eq!(emit_scenario(&back), text);
        prop_assert_eq!(back, s);
    }

    #[test]
    fn projection_keeps_projected_strings(seed in any::<u64>()) {
        let s = gen_scenario(&params(seed, 2)).unwrap();
        for set in s.sets() {
            let p = project_automaton(s.task(), set);
            for w in bounded_language(s.task(), 5).unwrap() {
                prop_assert!(p.defined(&project_string(&w, set)));
            }
        }
    }

    #[test]
    fn composition_accepts_exactly_the_synchronized_strings(seed in any::<u64>()) {
        let s = gen_scenario(&params(seed, 2)).unwrap();
        let a = project_automaton(s.task(), &s.sets()[0]);
        let b = project_automaton(s.task(), &s.sets()[1]);
        let ab = parallel_compose(&a, &b).unwrap();
        let team = bounded_language(&ab, 5).unwrap();
        for w in &team {
            prop_assert!(a.defined(&project_string(w, a.alphabet())));
            prop_assert!(b.defined(&project_string(w, b.alphabet())));
        }
        for w in bounded_language(s.task(), 5).unwrap() {
            prop_assert!(team.contains(&w));
        }
    }

    #[test]
    fn composition_is_commutative_and_associative(seed in any::<u64>()) {
        let s = gen_scenario(&params(seed, 3)).unwrap();
        let [a, b, c] = [0, 1, 2].map(|i| project_automaton(s.task(), &s.sets()[i]).determinize());
        let ab = parallel_compose(&a, &b).unwrap();
        prop_assert!(bisimilar(&ab, &parallel_compose(&b, &a).unwrap()).holds);
        let left = parallel_compose(&ab, &c).unwrap();
        let right = parallel_compose(&a, &parallel_compose(&b, &c).unwrap()).unwrap();
        prop_assert!(bisimilar(&left, &right).holds);
    }

    #[test]
    fn determinization_is_bisimilar_on_deterministic_input(seed in any::<u64>()) {
        let s = gen_scenario(&params(seed, 2)).unwrap();
        prop_assert!(bisimilar(s.task(), &s.task().determinize()).holds);
    }

    #[test]
    fn determinization_keeps_the_bounded_language(seed in any::<u64>()) {
        let a = gen_automaton(seed, 5, 3).unwrap();
        prop_assert_eq!(bounded_language(&a, 5).unwrap(), bounded_language(&a.determinize(), 5).unwrap());
    }

    #[test]
    fn strategies_give_identical_reports(seed in any::<u64>(), agents in 2usize..4) {
        let s = gen_scenario(&params(seed, agents)).unwrap();
        let seq = decomposability_report(s.task(), s.sets(), Execution::Sequential).unwrap();
        let par = decomposability_report(s.task(), s.sets(), Execution::Parallel).unwrap();
        prop_assert_eq!(seq, par);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn projection_controllers_realize_decomposable_tasks(seed in any::<u64>(), agents in 2usize..4) {
        let Ok(s) = gen_decomposable(&params(seed, agents), 50) else { return Ok(()) };
        let cl = ClosedLoop::with_projection_controllers(s.task().clone(), s.alphabet.clone()).unwrap();
        let v = verify_team(&cl, Execution::Sequential).unwrap();
        prop_assert!(v.locals_hold);
        prop_assert!(v.holds());
    }

    #[test]
    fn failure_chain_is_consistent(seed in any::<u64>(), agents in 2usize..4) {
        let Ok(s) = gen_decomposable(&params(seed, agents), 50) else { return Ok(()) };
        let Some(failures) = gen_passive_failure(&s, seed).unwrap() else { return Ok(()) };
        let cl = ClosedLoop::with_projection_controllers(s.task().clone(), s.alphabet.clone())
            .unwrap()
            .with_failures(failures.clone())
            .unwrap();
        let v = verify_team_under_failure(&cl, Execution::Sequential).unwrap();
        prop_assert!(v.chain_consistent);
        let r = remains_decomposable(s.task(), &s.alphabet, &failures, Execution::Sequential).unwrap();
        prop_assert_eq!(v.holds(), r.remains_decomposable);
    }
}
