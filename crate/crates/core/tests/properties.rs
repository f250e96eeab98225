//! Property tests over random contracts, recursion-free and recursive.

use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

use asc_core::compliance::{
    ac, ac_k, check_derivation, prove, rbk_compliance, rbk_explore, Derivation, Environment, Judgment, RbkMode,
};
use asc_core::games::{build_config_tree, label_chooser, play_from_labels, replay, tree_is_xfree, winning, xfree_tree};
use asc_core::orchestrators::{derivation_to_orch, orch_check, orch_check_plain, synth};
use asc_core::semantics::{
    orch_steps, rbk_system_steps, tb_reachable, tb_steps, OrchLabel, OrchSystem, Player, RbkRule, TBConfig,
    TbAct,
};
use asc_core::subcontract::{
    apply_functor, check_sub_derivation, compile_functor, sub_k, sub_prove, subcontract, SubDerivation, SubEnv,
    SubJudgment,
};
use asc_core::testkit::{enumerate_contracts, enumerate_orchs, sample_recursive, EnumSpec};
use asc_core::{parse_contract, parse_orch, Contract, Orch};

fn finite_contract() -> impl Strategy<Value = Contract> {
    let leaf = Just(Contract::Success);
    leaf.prop_recursive(3, 24, 2, |inner| {
        (0..3u8, 1..4u8, prop::collection::vec(inner, 2)).prop_map(|(kind, mask, ks)| {
            let bs: Vec<_> = ["a", "b"]
                .iter()
                .zip(ks)
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, (n, k))| (n.to_string(), k))
                .collect();
            match kind {
                0 => Contract::input(bs),
                1 => Contract::output_sum(bs),
                _ => Contract::internal(bs),
            }
            .expect("distinct labels")
        })
    })
}

fn recursive_contract() -> impl Strategy<Value = Contract> {
    any::<u64>().prop_map(|seed| {
        let spec = EnumSpec { max_depth: 3, ..EnumSpec::default() };
        sample_recursive(&mut StdRng::seed_from_u64(seed), &spec)
    })
}

fn any_contract() -> impl Strategy<Value = Contract> {
    prop_oneof![finite_contract(), recursive_contract()]
}

fn small_orch() -> impl Strategy<Value = Orch> {
    let orchs = enumerate_orchs(&EnumSpec::default(), 1);
    (0..orchs.len()).prop_map(move |i| orchs[i].clone())
}

/// Every premise environment extends its parent's by exactly the parent
/// judgment, and never exceeds the closure product.
fn env_grows(d: &Derivation, bound: usize) -> bool {
    d.env.len() <= bound
        && d.premises.iter().all(|p| {
            (p.env.len() == d.env.len() + 1 || d.env.contains(&d.judgment)) && env_grows(p, bound)
        })
}

fn sub_env_grows(d: &SubDerivation, bound: usize) -> bool {
    d.env.len() <= bound && d.premises.iter().all(|p| p.env.len() == d.env.len() + 1 && sub_env_grows(p, bound))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, ..ProptestConfig::default() })]

    #[test]
    fn unfolding_preserves_the_tree(c in any_contract()) {
        prop_assert!(c.equal_regular(&c.unfold()));
        prop_assert!(c.equal_regular(&c.unfold_head()));
        prop_assert_eq!(c.canonical_key(), c.unfold().canonical_key());
    }

    #[test]
    fn canonical_keys_decide_tree_equality(x in any_contract(), y in any_contract()) {
        prop_assert_eq!(x.equal_regular(&y), x.canonical_key() == y.canonical_key());
        prop_assert_eq!(x.equal_regular(&y), y.equal_regular(&x));
    }

    #[test]
    fn closure_is_closed_under_continuations(c in any_contract()) {
        let closure = c.subterm_closure();
        for s in &closure {
            for (_, k) in s.branches().unwrap_or(&[]) {
                let k = k.unfold_head();
                prop_assert!(closure.contains(&k), "{} missing from closure of {}", k, c);
            }
        }
    }

    #[test]
    fn contracts_print_and_parse_back(c in any_contract()) {
        let back = parse_contract(&c.to_string()).unwrap();
        prop_assert!(back.equal_regular(&c), "{} reparsed as {}", c, back);
    }

    #[test]
    fn quasi_dual_is_compliant(c in any_contract()) {
        let q = c.quasi_dual();
        prop_assert!(q.validate().is_ok());
        prop_assert!(ac(&q, &c), "{} not compliant with {}", q, c);
    }

    #[test]
    fn strata_are_monotone(x in any_contract(), y in any_contract(), k in 0usize..6) {
        prop_assert!(!ac_k(&x, &y, k + 1) || ac_k(&x, &y, k));
        prop_assert!(!sub_k(&x, &y, k + 1) || sub_k(&x, &y, k));
    }

    #[test]
    fn finite_strata_converge(x in finite_contract(), y in finite_contract()) {
        let k = x.depth().max(y.depth()) + 1;
        prop_assert_eq!(ac(&x, &y), ac_k(&x, &y, k));
        prop_assert_eq!(subcontract(&x, &y), sub_k(&x, &y, k));
    }

    #[test]
    fn proof_search_environment_is_bounded(x in any_contract(), y in any_contract()) {
        let bound = x.subterm_closure().len() * y.subterm_closure().len();
        if let Some(d) = prove(&Environment::new(), &Judgment::new(&x, &y)) {
            prop_assert!(check_derivation(&d));
            prop_assert!(env_grows(&d, bound));
        }
        if let Some(d) = sub_prove(&SubEnv::new(), &SubJudgment::new(&x, &y)) {
            prop_assert!(check_sub_derivation(&d));
            prop_assert!(sub_env_grows(&d, bound));
        }
    }

    #[test]
    fn derivations_round_trip_through_json(x in any_contract(), y in any_contract()) {
        if let Some(d) = prove(&Environment::new(), &Judgment::new(&x, &y)) {
            let back = Derivation::from_json(&d.to_json()).unwrap();
            prop_assert!(check_derivation(&back));
            prop_assert_eq!(back.to_json(), d.to_json());
        }
        if let Some(d) = sub_prove(&SubEnv::new(), &SubJudgment::new(&x, &y)) {
            let back = SubDerivation::from_json(&d.to_json()).unwrap();
            prop_assert!(check_sub_derivation(&back));
            prop_assert_eq!(back.to_json(), d.to_json());
        }
    }

    #[test]
    fn rollback_agrees_with_compliance(x in finite_contract(), y in finite_contract()) {
        prop_assert_eq!(rbk_compliance(&x, &y, RbkMode::Exhaustive).unwrap(), ac(&x, &y));
    }

    #[test]
    fn rollback_keeps_stacks_balanced(x in finite_contract(), y in finite_contract()) {
        let e = rbk_explore(&x, &y).unwrap();
        for s in &e.states {
            prop_assert_eq!(s.client.stack.len(), s.server.stack.len());
            prop_assert!(s.client.stack.len() <= x.depth().max(y.depth()));
        }
        for s in &e.states {
            let steps = rbk_system_steps(s);
            if steps.iter().any(|(r, _)| *r != RbkRule::Rbk) {
                prop_assert!(steps.iter().all(|(r, _)| *r != RbkRule::Rbk));
            }
        }
    }

    #[test]
    fn turn_based_moves_are_partitioned(x in any_contract(), y in any_contract()) {
        for cfg in tb_reachable(&TBConfig::new(&x, &y)) {
            let steps: Vec<_> = tb_steps(&cfg).into_iter().filter(|(l, _)| l.act != TbAct::Tick).collect();
            let buffering = steps.iter().filter(|(l, _)| l.is_buffering_output()).count();
            let inputs = steps.iter().filter(|(l, _)| matches!(l.act, TbAct::Input(_)) && l.player != Player::C).count();
            let c_moves = steps.iter().filter(|(l, _)| l.player == Player::C).count();
            let kinds = [buffering > 0, inputs > 0, c_moves > 0].iter().filter(|b| **b).count();
            prop_assert!(kinds <= 1, "mixed moves at {}", cfg);
            prop_assert!(inputs <= 1, "ambiguous inputs at {}", cfg);
        }
    }

    #[test]
    fn success_move_needs_successful_client(x in any_contract(), y in any_contract()) {
        for cfg in tb_reachable(&TBConfig::new(&x, &y)) {
            let steps = tb_steps(&cfg);
            let tick = steps.iter().any(|(l, _)| l.act == TbAct::Tick);
            prop_assert_eq!(tick, cfg.client.is_success());
            if tick {
                prop_assert!(steps.iter().all(|(l, _)| l.act == TbAct::Tick || l.player == Player::B));
            }
        }
    }

    #[test]
    fn compliance_matches_xfree_trees(x in any_contract(), y in any_contract()) {
        let tree = xfree_tree(&x, &y);
        prop_assert_eq!(tree.is_some(), ac(&x, &y));
        if let Some(t) = tree {
            prop_assert!(tree_is_xfree(&t));
        }
    }

    #[test]
    fn tree_paths_are_traces(x in any_contract(), y in any_contract()) {
        let t = build_config_tree(&x, &y, &mut label_chooser(&[]));
        for labels in t.paths() {
            let play = play_from_labels(&labels);
            prop_assert!(play.iter().enumerate().all(|(i, e)| e.time == i + 1));
            prop_assert!(replay(&x, &y, &play).is_some());
            if let Some(last) = labels.last() {
                let ticks = last.act == TbAct::Tick;
                prop_assert_eq!(winning(&play, false, Player::C), ticks);
            }
        }
    }

    #[test]
    fn synthesized_orchestrators_are_correct(x in any_contract(), y in any_contract()) {
        let fs = synth(&x, &y);
        prop_assert_eq!(fs.is_empty(), !ac(&x, &y));
        for f in &fs {
            prop_assert!(f.validate().is_ok());
            prop_assert!(orch_check(f, &x, &y), "{} fails", f);
            prop_assert!(orch_check_plain(f, &x, &y), "{} fails on the plain LTS", f);
        }
        if let Some(d) = prove(&Environment::new(), &Judgment::new(&x, &y)) {
            let (f, od) = derivation_to_orch(&d).unwrap();
            prop_assert!(f.is_closed() && f.validate().is_ok());
            prop_assert!(od.is_well_formed());
            prop_assert!(parse_orch(&f.to_string()).unwrap().equal_regular(&f));
        }
    }

    #[test]
    fn orchestrated_compliance_lts_agree(x in finite_contract(), y in finite_contract(), f in small_orch()) {
        prop_assert_eq!(orch_check(&f, &x, &y), orch_check_plain(&f, &x, &y));
    }

    #[test]
    fn orchestrator_moves_follow_labels(x in any_contract(), y in any_contract(), f in small_orch()) {
        let sys = OrchSystem::new(&x, &f, &y);
        let head = f.unfold_head();
        for (label, next) in orch_steps(&sys) {
            match (&label, &head) {
                (OrchLabel::Silent(_), _) => prop_assert!(next.orch.equal_regular(&sys.orch)),
                (OrchLabel::Plus(a), Orch::Plus(b, k)) => {
                    prop_assert_eq!(a, b);
                    prop_assert!(next.orch.equal_regular(k));
                }
                (OrchLabel::Tau(a), Orch::Disj(es)) => {
                    let k = &es.iter().find(|(b, _)| b == a).unwrap().1;
                    prop_assert!(next.orch.equal_regular(k));
                }
                _ => prop_assert!(false, "label {} with orchestrator {}", label, f),
            }
        }
    }

    #[test]
    fn subcontract_is_reflexive(c in any_contract()) {
        prop_assert!(subcontract(&c, &c));
    }

    #[test]
    fn subcontract_bridges_through_quasi_dual(x in any_contract(), y in any_contract()) {
        if subcontract(&x, &y) {
            prop_assert!(ac(&x.quasi_dual(), &y));
        }
    }

    #[test]
    fn identity_functor_preserves_orchestrators(client in any_contract(), server in any_contract()) {
        let d = sub_prove(&SubEnv::new(), &SubJudgment::new(&server, &server)).unwrap();
        let functor = compile_functor(&d).unwrap();
        prop_assert_eq!(apply_functor(&functor, &Orch::Idle), Orch::Idle);
        for f in synth(&client, &server) {
            let g = apply_functor(&functor, &f);
            prop_assert!(g.equal_regular(&f), "{} became {}", f, g);
        }
    }

    #[test]
    fn functors_are_sound(client in any_contract(), lower in any_contract(), upper in any_contract()) {
        if let Some(d) = sub_prove(&SubEnv::new(), &SubJudgment::new(&lower, &upper)) {
            let functor = compile_functor(&d).unwrap();
            for f in synth(&client, &lower) {
                let g = apply_functor(&functor, &f);
                prop_assert!(orch_check(&g, &client, &upper), "{} became {}", f, g);
            }
        }
    }

    #[test]
    fn enumeration_is_deterministic(seed in any::<u64>(), depth in 0usize..3) {
        let spec = EnumSpec { max_depth: depth, allow_recursion: true, samples: 20, seed, ..EnumSpec::default() };
        prop_assert_eq!(enumerate_contracts(&spec).unwrap(), enumerate_contracts(&spec).unwrap());
    }
}

#[test]
fn enumeration_counts_are_frozen() {
    let count = |d| enumerate_contracts(&EnumSpec { max_depth: d, ..EnumSpec::default() }).unwrap().len();
    assert_eq!(count(0), 1);
    assert_eq!(count(1), 8);
    assert_eq!(count(2), 225);
}

#[test]
fn enumeration_is_duplicate_free() {
    let cs = enumerate_contracts(&EnumSpec { max_depth: 2, allow_recursion: true, samples: 50, ..EnumSpec::default() }).unwrap();
    let keys: std::collections::HashSet<_> = cs.iter().map(Contract::canonical_key).collect();
    assert_eq!(keys.len(), cs.len());
}

#[test]
fn rollback_can_end_with_history() {
    // A run that commits to the second branch of an affectible sum ends
    // with the first branch still on the stack.
    let x = parse_contract("!a + !b").unwrap();
    let y = parse_contract("?a + ?b").unwrap();
    let e = rbk_explore(&x, &y).unwrap();
    assert!(e.all_stuck_successful());
    assert!(e.stuck.iter().any(|v| !e.states[*v].client.stack.is_empty()));
}

/// The exhaustive cross-check over the largest depth-3 slice that is
/// practical on one core: all pairs of contracts of size at most 5.
#[test]
#[ignore = "takes several minutes"]
fn cross_check_depth_three_size_five() {
    use asc_core::testkit::cross_check;
    let spec = EnumSpec { max_depth: 3, max_size: Some(5), ..EnumSpec::default() };
    let report = cross_check(&spec).unwrap();
    assert!(report.is_clean(), "{report}");
}
