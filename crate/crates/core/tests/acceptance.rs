//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when a criterion's outcome differs from the recorded
//! expectation.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use asc_core::compliance::{ac, check_derivation, prove, rbk_explore, Derivation, Environment, Judgment, Rule};
use asc_core::orchestrators::{o2d, orch_equal_regular, synth};
use asc_core::semantics::{RbkRule, RbkSystem};
use asc_core::subcontract::{apply_functor, compile_functor, sub_prove, subcontract, SubDerivation, SubEnv, SubJudgment, SubRule};
use asc_core::testkit::{
    bounded_pairs, cross_check_pairs, enumerate_contracts, enumerate_orchs, sample_recursive_pairs, stratified_check,
    subcontract_check, EnumSpec,
};
use asc_core::{parse_contract, parse_orch, Contract};

const BUYER: &str = "!bag.?price.(!card (+) !cash) + !belt.?price.(!card (+) !cash)";
const SELLER: &str = "?belt.!price.?cash + ?bag.!price.(?card + ?cash)";
const SELLER_II: &str = "?belt.!price.?cash + ?bag.(!price.(?card + ?cash + ?cheque) + !scratchcard)";

/// Time limit for proving Buyer/Seller.
const PROVE_BUDGET: Duration = Duration::from_secs(1);
/// Target for the whole cross-check of criterion 4.
const CROSS_CHECK_BUDGET: Duration = Duration::from_secs(300);
/// Per-call limit of the termination guards.
const CALL_BUDGET: Duration = Duration::from_secs(10);
/// Pairs of recursion-free contracts in the cross-check. All pairs up to
/// depth 2 are included and the depth-3 pairs are bounded by size to fit.
const PAIR_CAP: usize = 250_000;
/// Recursive pairs in the cross-check; at least 500 are required.
const RECURSIVE_PAIRS: usize = 1000;
/// Random recursive inputs for the termination guards.
const TERMINATION_INPUTS: usize = 1000;
/// Tolerated disagreements, round-trip failures and mismatches.
const ZERO: usize = 0;

/// Criteria recorded as unattainable, with the reason.
const EXPECTED_FAILURES: &[(u32, &str)] = &[
    (1, "the prescribed rule order picks +.(+) for the price step, where the displayed derivation shows +.+"),
    (3, "the rollback runs of the example end with non-empty stacks"),
];

fn c(s: &str) -> Contract {
    parse_contract(s).expect("valid contract")
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

/// Preorder listing of a derivation: rule, client, server.
fn preorder(d: &Derivation, out: &mut Vec<(Rule, Contract, Contract)>) {
    out.push((d.rule, d.judgment.client.clone(), d.judgment.server.clone()));
    d.premises.iter().for_each(|p| preorder(p, out));
}

fn sub_preorder(d: &SubDerivation, out: &mut Vec<(SubRule, Contract, Contract)>) {
    out.push((d.rule, d.judgment.lower.clone(), d.judgment.upper.clone()));
    d.premises.iter().for_each(|p| sub_preorder(p, out));
}

/// The Buyer/Seller derivation as displayed, in preorder.
fn display_one() -> Vec<(Rule, Contract, Contract)> {
    vec![
        (Rule::PlusPlus, c(BUYER), c(SELLER)),
        (Rule::PlusPlus, c("?price.(!card (+) !cash)"), c("!price.(?card + ?cash)")),
        (Rule::OplusPlus, c("!card (+) !cash"), c("?card + ?cash")),
        (Rule::Ax, Contract::Success, Contract::Success),
        (Rule::Ax, Contract::Success, Contract::Success),
    ]
}

fn same_nodes<R: PartialEq>(got: &[(R, Contract, Contract)], want: &[(R, Contract, Contract)], rules: bool) -> bool {
    got.len() == want.len()
        && got
            .iter()
            .zip(want)
            .all(|(g, w)| (!rules || g.0 == w.0) && g.1.equal_regular(&w.1) && g.2.equal_regular(&w.2))
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let Some(d) = prove(&Environment::new(), &Judgment::new(&c(BUYER), &c(SELLER))) else {
        return outcome(false, "prove fails");
    };
    let elapsed = start.elapsed();
    let mut got = Vec::new();
    preorder(&d, &mut got);
    let want = display_one();
    let judgments = same_nodes(&got, &want, false);
    let rules = same_nodes(&got, &want, true);
    let seq: Vec<&str> = d.rule_sequence().iter().map(Rule::name).collect();
    // The displayed derivation itself is derivable: o2d on the synthesized
    // orchestrator rebuilds it rule for rule.
    let f = parse_orch("<bag,!bag>+.<!price,price>.(<card,!card> \\/ <cash,!cash>)").unwrap();
    let rebuilt = o2d(&f, &c(BUYER), &c(SELLER)).map(|d2| {
        let mut v = Vec::new();
        preorder(&d2, &mut v);
        check_derivation(&d2) && same_nodes(&v, &want, true)
    });
    assert!(check_derivation(&d), "prove returned an invalid derivation");
    assert!(judgments, "judgments differ from the displayed derivation");
    assert_eq!(rebuilt, Some(true), "o2d does not rebuild the displayed derivation");
    assert!(elapsed < PROVE_BUDGET);
    outcome(
        rules && elapsed < PROVE_BUDGET,
        format!("rules {} (want +.+ +.+ (+).+ Ax Ax), judgments match, o2d rebuilds display, {elapsed:?}", seq.join(" ")),
    )
}

fn criterion_2() -> Outcome {
    let fs = synth(&c(BUYER), &c(SELLER));
    let want = parse_orch("<bag,!bag>+.<!price,price>.(<card,!card> \\/ <cash,!cash>)").unwrap();
    let pass = fs.len() == 1 && orch_equal_regular(&fs[0], &want);
    let shown: Vec<String> = fs.iter().map(|f| f.to_string()).collect();
    outcome(pass, format!("synth = [{}]", shown.join(", ")))
}

fn criterion_3() -> Outcome {
    let e = rbk_explore(&c(BUYER), &c(SELLER)).expect("recursion-free");
    let dead_end = |s: &RbkSystem| {
        s.client.current == Some(c("!card")) && s.server.current == Some(c("?cash"))
    };
    let visits_dead_end = e
        .states
        .iter()
        .enumerate()
        .any(|(v, s)| dead_end(s) && e.successors(v).all(|(_, r, _)| *r == RbkRule::Rbk));
    let mut rbk_counts = Vec::new();
    let mut stack = vec![(0usize, 0usize)];
    while let Some((v, n)) = stack.pop() {
        let succ: Vec<_> = e.successors(v).collect();
        if succ.is_empty() {
            rbk_counts.push(n);
        }
        for (_, r, w) in succ {
            stack.push((*w, n + usize::from(*r == RbkRule::Rbk)));
        }
    }
    let two_rollbacks = rbk_counts.iter().max() == Some(&2) && rbk_counts.iter().all(|n| *n == 0 || *n == 2);
    let all_successful = e.all_stuck_successful();
    let empty_stacks = e
        .stuck
        .iter()
        .all(|v| e.states[*v].client.stack.is_empty() && e.states[*v].server.stack.is_empty());
    assert!(visits_dead_end && two_rollbacks && all_successful);
    outcome(
        visits_dead_end && two_rollbacks && all_successful && empty_stacks,
        format!(
            "dead end visited, rollbacks per run {rbk_counts:?}, all {} maximal runs successful, stacks empty at the end: {empty_stacks}",
            e.stuck.len()
        ),
    )
}

fn recursion_free(depth: usize, size: Option<usize>) -> Vec<Contract> {
    enumerate_contracts(&EnumSpec { max_depth: depth, max_size: size, ..EnumSpec::default() }).unwrap()
}

fn criteria_4_and_5() -> (Outcome, Outcome) {
    let start = Instant::now();
    let (pairs, scope) = bounded_pairs(&EnumSpec { max_depth: 3, ..EnumSpec::default() }, PAIR_CAP).unwrap();
    let mut report = cross_check_pairs(&pairs);
    let spec = EnumSpec { max_depth: 3, seed: 2024, ..EnumSpec::default() };
    report.merge(cross_check_pairs(&sample_recursive_pairs(&spec, RECURSIVE_PAIRS)));
    let elapsed = start.elapsed();
    for line in report.disagreements.iter().chain(&report.round_trips).take(20) {
        println!("    {line}");
    }
    let four = outcome(
        report.disagreements.len() == ZERO && report.recursive >= 500 && elapsed < CROSS_CHECK_BUDGET,
        format!(
            "{} pairs ({} recursive), {} disagreements, {elapsed:.1?}; {scope}",
            report.pairs,
            report.recursive,
            report.disagreements.len()
        ),
    );
    let five = outcome(
        report.round_trips.len() == ZERO && report.compliant > 0,
        format!("{} compliant pairs, {} round-trip failures", report.compliant, report.round_trips.len()),
    );
    (four, five)
}

fn criterion_6() -> Outcome {
    let orchs = enumerate_orchs(&EnumSpec::default(), 1);
    let shallow = stratified_check(&recursion_free(2, None), &orchs);
    let deep = stratified_check(&recursion_free(3, Some(3)), &orchs);
    let mismatches: Vec<_> = shallow.mismatches.iter().chain(&deep.mismatches).collect();
    for m in mismatches.iter().take(20) {
        println!("    {m}");
    }
    outcome(
        mismatches.len() == ZERO,
        format!("{} instances, {} mismatches", shallow.instances + deep.instances, mismatches.len()),
    )
}

fn criterion_7() -> Outcome {
    let spec = EnumSpec { max_depth: 3, max_size: Some(4), allow_recursion: true, samples: 500, seed: 7, ..EnumSpec::default() };
    let mut contracts = recursion_free(2, None);
    contracts.extend(enumerate_contracts(&spec).unwrap());
    let failing: Vec<_> = contracts.iter().filter(|s| !ac(&s.quasi_dual(), s)).collect();
    let (sum, single) = (c("!a + !b"), c("!a"));
    let witness = ac(&sum.quasi_dual(), &single) && !subcontract(&sum, &single);
    outcome(
        failing.is_empty() && witness,
        format!(
            "{} contracts, {} without quasi-dual compliance; ac({}, !a) and not !a + !b << !a: {witness}",
            contracts.len(),
            failing.len(),
            sum.quasi_dual()
        ),
    )
}

/// The Seller/SellerII derivation as displayed, in preorder with branches
/// in label order.
fn display_two() -> Vec<(SubRule, Contract, Contract)> {
    vec![
        (SubRule::PlusPlusIn, c(SELLER), c(SELLER_II)),
        (SubRule::OplusPlus, c("!price.(?card + ?cash)"), c("!price.(?card + ?cash + ?cheque) + !scratchcard")),
        (SubRule::PlusPlusIn, c("?card + ?cash"), c("?card + ?cash + ?cheque")),
        (SubRule::Ax, Contract::Success, Contract::Success),
        (SubRule::Ax, Contract::Success, Contract::Success),
        (SubRule::OplusOplus, c("!price.?cash"), c("!price.?cash")),
        (SubRule::PlusPlusIn, c("?cash"), c("?cash")),
        (SubRule::Ax, Contract::Success, Contract::Success),
    ]
}

fn criterion_8() -> Outcome {
    let mut notes = Vec::new();
    let d = sub_prove(&SubEnv::new(), &SubJudgment::new(&c(SELLER), &c(SELLER_II)));
    let display = d.as_ref().is_some_and(|d| {
        let mut got = Vec::new();
        sub_preorder(d, &mut got);
        same_nodes(&got, &display_two(), true)
    });
    notes.push(format!("display: {display}"));
    let f = parse_orch("<bag,!bag>+.<!price,price>.(<card,!card> \\/ <cash,!cash>)").unwrap();
    let promoted = parse_orch("<bag,!bag>+.<!price,price>+.(<card,!card> \\/ <cash,!cash>)").unwrap();
    let seller = d.and_then(|d| compile_functor(&d).ok()).is_some_and(|fd| apply_functor(&fd, &f).equal_regular(&promoted));
    notes.push(format!("promotion: {seller}"));
    let db = sub_prove(&SubEnv::new(), &SubJudgment::new(&c("?d + ?b.(!b (+) !c)"), &c("?d.!a + ?b.(!a + !c + !e)")));
    let g = parse_orch("<b,!b>+.(<!b,b> \\/ <!c,c>)").unwrap();
    let db_ok = db
        .and_then(|d| compile_functor(&d).ok())
        .is_some_and(|fd| apply_functor(&fd, &g).equal_regular(&parse_orch("<b,!b>+.<!c,c>+").unwrap()));
    notes.push(format!("d/b example: {db_ok}"));
    let contracts = recursion_free(2, None);
    let report = subcontract_check(&contracts, &contracts);
    for m in report.failures.iter().take(20) {
        println!("    {m}");
    }
    notes.push(format!(
        "{} related pairs, {} functor triples, {} failures",
        report.related,
        report.functor_triples,
        report.failures.len()
    ));
    outcome(display && seller && db_ok && report.failures.len() == ZERO, notes.join(", "))
}

fn criterion_9() -> Outcome {
    let spec = EnumSpec { alphabet: 3, max_depth: 4, seed: 9, ..EnumSpec::default() };
    let pairs = sample_recursive_pairs(&spec, TERMINATION_INPUTS);
    let mut worst = [Duration::ZERO; 3];
    for (x, y) in &pairs {
        let timed = |f: &dyn Fn()| {
            let t = Instant::now();
            f();
            t.elapsed()
        };
        let times = [
            timed(&|| {
                prove(&Environment::new(), &Judgment::new(x, y));
            }),
            timed(&|| {
                synth(x, y);
            }),
            timed(&|| {
                sub_prove(&SubEnv::new(), &SubJudgment::new(x, y));
            }),
        ];
        for (w, t) in worst.iter_mut().zip(times) {
            *w = (*w).max(t);
        }
    }
    outcome(
        worst.iter().all(|w| *w < CALL_BUDGET),
        format!(
            "{} inputs, slowest prove {:?}, synth {:?}, sub_prove {:?}",
            pairs.len(),
            worst[0],
            worst[1],
            worst[2]
        ),
    )
}

fn main() -> ExitCode {
    let (one, two, three) = (criterion_1(), criterion_2(), criterion_3());
    let (four, five) = criteria_4_and_5();
    let results = vec![
        (1, one),
        (2, two),
        (3, three),
        (4, four),
        (5, five),
        (6, criterion_6()),
        (7, criterion_7()),
        (8, criterion_8()),
        (9, criterion_9()),
    ];
    let mut unexpected = 0;
    for (n, o) in &results {
        let expected = EXPECTED_FAILURES.iter().find(|(m, _)| m == n);
        println!("criterion {n}: {}  {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if let Some((_, why)) = expected {
            println!("    expected failure: {why}");
        }
        if o.pass == expected.is_some() {
            unexpected += 1;
        }
    }
    if unexpected == 0 {
        println!("acceptance: all outcomes as recorded");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {unexpected} unexpected outcome(s)");
        ExitCode::FAILURE
    }
}
