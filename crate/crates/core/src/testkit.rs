//! Enumerators, random samplers and brute-force oracles used to cross-check
//! the decision procedures against each other.
//!
//! Exhaustive enumeration is recursion-free. Recursive contracts come from
//! a seeded sampler producing tail-guarded single-variable loops.

use std::collections::{HashMap, HashSet};
use std::fmt;

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use thiserror::Error;

use crate::compliance::{ac_k, check_derivation, prove, rbk_compliance, Environment, Judgment, RbkMode};
use crate::contract::{Branch, Contract, Name};
use crate::games::{exists_xfree_tree, is_winning_strategy, orch_from_strategy, strategy_from_orch};
use crate::orch::{OAct, Orch};
use crate::orchestrators::{derivation_to_orch, o2d, orch_check, orch_check_k, orch_check_plain, synth};
use crate::subcontract::{apply_functor, compile_functor, sub_k, sub_prove, SubEnv, SubJudgment};

/// Parameters of an enumeration or sampling run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnumSpec {
    /// Number of action names, drawn from `a`, `b`, `c`.
    pub alphabet: usize,
    pub max_depth: usize,
    /// Largest number of branches in one choice.
    pub max_branching: usize,
    /// Upper bound on [`Contract::size`], if any.
    pub max_size: Option<usize>,
    /// Append `samples` recursive contracts to the exhaustive stream.
    pub allow_recursion: bool,
    pub samples: usize,
    pub seed: u64,
    /// Largest number of contracts exhaustive enumeration may produce.
    pub cap: usize,
}

impl Default for EnumSpec {
    fn default() -> EnumSpec {
        EnumSpec {
            alphabet: 2,
            max_depth: 2,
            max_branching: 3,
            max_size: None,
            allow_recursion: false,
            samples: 0,
            seed: 0,
            cap: 200_000,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TestkitError {
    #[error("alphabet size must be between 1 and 3, got {0}")]
    Alphabet(usize),
    #[error("depth must be at most 4, got {0}")]
    Depth(usize),
    #[error("branching must be between 1 and 3, got {0}")]
    Branching(usize),
    #[error("exhaustive enumeration exceeds the cap of {0} contracts")]
    CapExceeded(usize),
}

impl EnumSpec {
    pub fn validate(&self) -> Result<(), TestkitError> {
        if !(1..=3).contains(&self.alphabet) {
            return Err(TestkitError::Alphabet(self.alphabet));
        }
        if self.max_depth > 4 {
            return Err(TestkitError::Depth(self.max_depth));
        }
        if !(1..=3).contains(&self.max_branching) {
            return Err(TestkitError::Branching(self.max_branching));
        }
        Ok(())
    }

    pub fn names(&self) -> Vec<Name> {
        ["a", "b", "c"][..self.alphabet].iter().map(|s| s.to_string()).collect()
    }
}

/// Non-empty label sets of at most `max` elements, smallest first.
fn label_sets(names: &[Name], max: usize) -> Vec<Vec<Name>> {
    let mut out: Vec<Vec<Name>> = (1u32..(1 << names.len()))
        .map(|mask| names.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, n)| n.clone()).collect())
        .filter(|s: &Vec<Name>| s.len() <= max)
        .collect();
    out.sort_by(|x, y| x.len().cmp(&y.len()).then_with(|| x.cmp(y)));
    out
}

/// All recursion-free contracts within the spec, in a fixed order, followed
/// by the recursive samples when recursion is allowed. Duplicates up to
/// tree equality are removed.
pub fn enumerate_contracts(spec: &EnumSpec) -> Result<Vec<Contract>, TestkitError> {
    spec.validate()?;
    let names = spec.names();
    let sets = label_sets(&names, spec.max_branching);
    let fits = |c: &Contract| spec.max_size.is_none_or(|m| c.size() <= m);
    let mut level = vec![Contract::Success];
    for _ in 0..spec.max_depth {
        let mut next = vec![Contract::Success];
        for kind in 0..3 {
            for set in &sets {
                if kind == 1 && set.len() < 2 {
                    continue;
                }
                let mut conts: Vec<Vec<Branch>> = vec![Vec::new()];
                for name in set {
                    conts = conts
                        .into_iter()
                        .flat_map(|prefix| {
                            level.iter().map(move |k| {
                                let mut p = prefix.clone();
                                p.push((name.clone(), k.clone()));
                                p
                            })
                        })
                        .filter(|bs| spec.max_size.is_none_or(|m| bs.iter().map(|(_, k)| 1 + k.size()).sum::<usize>() <= m))
                        .collect();
                }
                for bs in conts {
                    let c = match kind {
                        0 => Contract::Input(bs),
                        1 => Contract::Affectible(bs),
                        _ => Contract::Internal(bs),
                    };
                    if fits(&c) {
                        next.push(c);
                        if next.len() > spec.cap {
                            return Err(TestkitError::CapExceeded(spec.cap));
                        }
                    }
                }
            }
        }
        level = next;
    }
    if spec.allow_recursion {
        let mut rng = StdRng::seed_from_u64(spec.seed);
        let mut keys: HashSet<_> = level.iter().map(Contract::canonical_key).collect();
        let mut attempts = 0;
        let target = level.len() + spec.samples;
        while level.len() < target && attempts < 50 * spec.samples.max(1) {
            attempts += 1;
            let c = sample_recursive(&mut rng, spec);
            if keys.insert(c.canonical_key()) {
                level.push(c);
            }
        }
    }
    Ok(level)
}

/// Orchestrators over the enumeration alphabet up to the given depth, built from
/// `1`, single `+` actions and disjunctions of plain actions.
pub fn enumerate_orchs(spec: &EnumSpec, depth: usize) -> Vec<Orch> {
    let acts: Vec<OAct> = spec
        .names()
        .iter()
        .flat_map(|n| [OAct::server_in(n), OAct::server_out(n)])
        .collect();
    let mut level = vec![Orch::Idle];
    for _ in 0..depth {
        let mut next = vec![Orch::Idle];
        for a in &acts {
            next.extend(level.iter().map(|k| Orch::plus(a.clone(), k.clone())));
        }
        for mask in 1u32..(1 << acts.len()) {
            let chosen: Vec<&OAct> = acts.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, a)| a).collect();
            let mut entries: Vec<Vec<(OAct, Orch)>> = vec![Vec::new()];
            for a in chosen {
                entries = entries
                    .into_iter()
                    .flat_map(|p| {
                        level.iter().map(move |k| {
                            let mut p = p.clone();
                            p.push((a.clone(), k.clone()));
                            p
                        })
                    })
                    .collect();
            }
            next.extend(entries.into_iter().map(|es| Orch::disj(es).expect("distinct actions")));
        }
        level = next;
    }
    level
}

/// A random recursion-free contract of depth at most `depth`, whose leaves
/// may be the variable `x` when `var` is set.
fn sample_body(rng: &mut StdRng, spec: &EnumSpec, depth: usize, var: bool, head: bool) -> Contract {
    if depth == 0 || (!head && rng.gen_bool(0.3)) {
        return if var && !head && rng.gen_bool(0.6) { Contract::var("x") } else { Contract::Success };
    }
    let names = spec.names();
    let kind = rng.gen_range(0..3);
    let min = if kind == 1 { 2 } else { 1 };
    let max = spec.max_branching.min(names.len());
    if min > max {
        return sample_body(rng, spec, depth, var, head);
    }
    let n = rng.gen_range(min..=max);
    let mut chosen: Vec<Name> = names.choose_multiple(rng, n).cloned().collect();
    chosen.sort();
    let bs: Vec<Branch> = chosen
        .into_iter()
        .map(|a| (a, sample_body(rng, spec, depth - 1, var, false)))
        .collect();
    match kind {
        0 => Contract::Input(bs),
        1 => Contract::Affectible(bs),
        _ => Contract::Internal(bs),
    }
}

/// A random contract with a single `rec x` loop placed at or below the
/// root, with `x` only in tail positions of the loop body.
pub fn sample_recursive(rng: &mut StdRng, spec: &EnumSpec) -> Contract {
    let depth = spec.max_depth.max(1);
    loop {
        let prefix_len = rng.gen_range(0..depth);
        let body = sample_body(rng, spec, depth - prefix_len, true, true);
        if !body.free_vars().contains("x") {
            continue;
        }
        let mut c = Contract::rec("x", body);
        for _ in 0..prefix_len {
            let a = spec.names().choose(rng).expect("non-empty alphabet").clone();
            c = if rng.gen_bool(0.5) { Contract::recv(&a, c) } else { Contract::send(&a, c) };
        }
        if c.validate().is_ok() {
            return c;
        }
    }
}

/// Seeded pairs with at least one recursive side. A third of the pairs
/// pair a contract with its quasi-dual, so compliant pairs are frequent.
pub fn sample_recursive_pairs(spec: &EnumSpec, count: usize) -> Vec<(Contract, Contract)> {
    let mut rng = StdRng::seed_from_u64(spec.seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let server = sample_recursive(&mut rng, spec);
        let client = match rng.gen_range(0..3) {
            0 => server.quasi_dual(),
            1 => sample_recursive(&mut rng, spec),
            _ => sample_body(&mut rng, spec, spec.max_depth, false, true),
        };
        if rng.gen_bool(0.5) {
            out.push((client, server));
        } else {
            out.push((server, client));
        }
    }
    out
}

/// A level at which the stratified approximants of a pair have converged:
/// one more than the number of judgments reachable by proof search.
pub fn convergence_bound(left: &Contract, right: &Contract) -> usize {
    if !left.has_rec() && !right.has_rec() {
        return left.depth().max(right.depth()) + 1;
    }
    left.subterm_closure().len() * right.subterm_closure().len() + 1
}

/// The compliance verdicts of one client/server pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PairVerdicts {
    pub prove: bool,
    pub synth: bool,
    pub rollback: bool,
    pub strategy: bool,
    pub stratified: bool,
}

impl PairVerdicts {
    pub fn agree(&self) -> bool {
        let v = [self.prove, self.synth, self.rollback, self.strategy, self.stratified];
        v.iter().all(|x| *x == v[0])
    }
}

impl fmt::Display for PairVerdicts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "prove={} synth={} rollback={} strategy={} ac_k={}",
            self.prove, self.synth, self.rollback, self.strategy, self.stratified
        )
    }
}

/// Computes the verdicts of a pair. Rollback is explored exhaustively on
/// recursion-free pairs and decided through compliance otherwise.
pub fn pair_verdicts(client: &Contract, server: &Contract) -> PairVerdicts {
    let mode = if client.has_rec() || server.has_rec() { RbkMode::ViaAc } else { RbkMode::Exhaustive };
    PairVerdicts {
        prove: prove(&Environment::new(), &Judgment::new(client, server)).is_some(),
        synth: !synth(client, server).is_empty(),
        rollback: rbk_compliance(client, server, mode).expect("mode matches recursion"),
        strategy: exists_xfree_tree(client, server),
        stratified: ac_k(client, server, convergence_bound(client, server)),
    }
}

/// Round trips between derivations, orchestrators and strategies on a
/// compliant pair. Returns a description of each failed check.
pub fn round_trip_failures(client: &Contract, server: &Contract) -> Vec<String> {
    let mut out = Vec::new();
    let Some(d) = prove(&Environment::new(), &Judgment::new(client, server)) else {
        return vec!["no derivation".into()];
    };
    for g in synth(client, server) {
        if !orch_check(&g, client, server) {
            out.push(format!("synthesized {g} fails orch_check"));
        }
    }
    let f = match derivation_to_orch(&d) {
        Ok((f, _)) => f,
        Err(e) => return vec![format!("derivation_to_orch: {e}")],
    };
    if !orch_check(&f, client, server) {
        out.push(format!("f(D) = {f} fails orch_check"));
    }
    let sigma = strategy_from_orch(&f, client, server);
    if !sigma.is_univocal() {
        out.push(format!("strategy of {f} is not univocal"));
    }
    if !is_winning_strategy(&sigma, client, server) {
        out.push(format!("strategy of {f} is not winning"));
    }
    match orch_from_strategy(&sigma) {
        Ok(g) if g.equal_regular(&f) => {}
        Ok(g) => out.push(format!("orch(strategy(f)) = {g} differs from {f}")),
        Err(e) => out.push(format!("orch_from_strategy: {e}")),
    }
    match o2d(&f, client, server) {
        Some(d2) if check_derivation(&d2) && d2.env.is_empty() && d2.judgment.equal_regular(&d.judgment) => {}
        Some(_) => out.push(format!("o2d({f}) is not a valid derivation")),
        None => out.push(format!("o2d({f}) fails")),
    }
    out
}

/// Outcome of a cross-check run.
#[derive(Clone, Debug, Default)]
pub struct CrossCheckReport {
    pub pairs: usize,
    pub compliant: usize,
    pub recursive: usize,
    /// Pairs whose verdicts disagree, with the verdicts.
    pub disagreements: Vec<String>,
    /// Compliant pairs failing a round trip, with the failed check.
    pub round_trips: Vec<String>,
}

impl CrossCheckReport {
    pub fn is_clean(&self) -> bool {
        self.disagreements.is_empty() && self.round_trips.is_empty()
    }

    pub fn merge(&mut self, other: CrossCheckReport) {
        self.pairs += other.pairs;
        self.compliant += other.compliant;
        self.recursive += other.recursive;
        self.disagreements.extend(other.disagreements);
        self.round_trips.extend(other.round_trips);
    }
}

impl fmt::Display for CrossCheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "pairs          {}", self.pairs)?;
        writeln!(f, "recursive      {}", self.recursive)?;
        writeln!(f, "compliant      {}", self.compliant)?;
        writeln!(f, "disagreements  {}", self.disagreements.len())?;
        writeln!(f, "round trips    {} failing", self.round_trips.len())?;
        for d in self.disagreements.iter().chain(&self.round_trips) {
            writeln!(f, "  {d}")?;
        }
        Ok(())
    }
}

/// Cross-checks the given pairs: verdict agreement on every pair and round
/// trips on every compliant pair.
pub fn cross_check_pairs(pairs: &[(Contract, Contract)]) -> CrossCheckReport {
    let mut report = CrossCheckReport::default();
    for (client, server) in pairs {
        report.pairs += 1;
        if client.has_rec() || server.has_rec() {
            report.recursive += 1;
        }
        let v = pair_verdicts(client, server);
        if !v.agree() {
            report.disagreements.push(format!("{client}  ~|  {server}: {v}"));
            continue;
        }
        if v.prove {
            report.compliant += 1;
            for failure in round_trip_failures(client, server) {
                report.round_trips.push(format!("{client}  ~|  {server}: {failure}"));
            }
        }
    }
    report
}

/// Cross-checks every pair of enumerated contracts. Recursive samples in
/// the enumeration are included.
pub fn cross_check(spec: &EnumSpec) -> Result<CrossCheckReport, TestkitError> {
    let contracts = enumerate_contracts(spec)?;
    let pairs: Vec<_> = contracts
        .iter()
        .flat_map(|c| contracts.iter().map(move |s| (c.clone(), s.clone())))
        .collect();
    Ok(cross_check_pairs(&pairs))
}

/// The pairs a bounded cross-check covers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scope {
    /// Every pair of contracts up to this depth is included.
    pub exhaustive_depth: usize,
    /// Pairs with a side at the full depth, restricted to contracts of at
    /// most this size; `None` when the full depth is exhaustive.
    pub size_bound: Option<usize>,
    pub pairs: usize,
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.size_bound {
            None => write!(f, "all pairs up to depth {} ({} pairs)", self.exhaustive_depth, self.pairs),
            Some(s) => write!(
                f,
                "all pairs up to depth {}, and pairs reaching depth {} among contracts of size at most {s} ({} pairs)",
                self.exhaustive_depth,
                self.exhaustive_depth + 1,
                self.pairs
            ),
        }
    }
}

fn all_pairs(xs: &[Contract], keep: impl Fn(&Contract, &Contract) -> bool) -> Vec<(Contract, Contract)> {
    xs.iter()
        .flat_map(|x| xs.iter().map(move |y| (x.clone(), y.clone())))
        .filter(|(x, y)| keep(x, y))
        .collect()
}

/// Recursion-free pairs for a cross-check of at most `pair_cap` pairs.
/// When the full enumeration is too large, all pairs one level shallower
/// are kept, together with the pairs reaching the full depth among
/// contracts of the largest size bound that fits.
pub fn bounded_pairs(spec: &EnumSpec, pair_cap: usize) -> Result<(Vec<(Contract, Contract)>, Scope), TestkitError> {
    let base = EnumSpec { allow_recursion: false, ..spec.clone() };
    let fitting = EnumSpec { cap: pair_cap.isqrt() + 1, ..base.clone() };
    if let Ok(all) = enumerate_contracts(&fitting) {
        if all.len().saturating_mul(all.len()) <= pair_cap {
            let pairs = all_pairs(&all, |_, _| true);
            let scope = Scope { exhaustive_depth: spec.max_depth, size_bound: None, pairs: pairs.len() };
            return Ok((pairs, scope));
        }
    }
    let depth = spec.max_depth;
    let shallow = enumerate_contracts(&EnumSpec { max_depth: depth - 1, ..base.clone() })?;
    let mut pairs = all_pairs(&shallow, |_, _| true);
    let mut chosen: Option<(usize, Vec<Contract>)> = None;
    for size in depth.. {
        let slice = enumerate_contracts(&EnumSpec { max_size: Some(size), ..base.clone() })?;
        let shallow_in_slice = slice.iter().filter(|c| c.depth() < depth).count();
        let deep_pairs = slice.len() * slice.len() - shallow_in_slice * shallow_in_slice;
        if pairs.len() + deep_pairs > pair_cap || spec.max_size.is_some_and(|m| size > m) {
            break;
        }
        let done = shallow_in_slice == shallow.len() && slice.len() == chosen.as_ref().map_or(0, |(_, s)| s.len());
        chosen = Some((size, slice));
        if done {
            break;
        }
    }
    let size_bound = chosen.as_ref().map(|(s, _)| *s);
    if let Some((_, slice)) = chosen {
        pairs.extend(all_pairs(&slice, |x, y| x.depth() == depth || y.depth() == depth));
    }
    let scope = Scope { exhaustive_depth: depth - 1, size_bound, pairs: pairs.len() };
    Ok((pairs, scope))
}

/// Outcome of comparing decision procedures with their stratified
/// approximants at the convergence level.
#[derive(Clone, Debug, Default)]
pub struct StratifiedReport {
    pub instances: usize,
    pub mismatches: Vec<String>,
}

/// Compares `ac`, `orch_check` and `subcontract` with their approximants at
/// [`convergence_bound`] over all pairs of the given recursion-free
/// contracts. Orchestrated compliance is checked against the synthesized
/// orchestrators and the given orchestrator family.
pub fn stratified_check(contracts: &[Contract], orchs: &[Orch]) -> StratifiedReport {
    let mut report = StratifiedReport::default();
    for x in contracts {
        for y in contracts {
            let k = convergence_bound(x, y);
            report.instances += 2;
            let ac = prove(&Environment::new(), &Judgment::new(x, y)).is_some();
            if ac != ac_k(x, y, k) {
                report.mismatches.push(format!("ac vs ac_{k} on {x}  ~|  {y}"));
            }
            let sub = sub_prove(&SubEnv::new(), &SubJudgment::new(x, y)).is_some();
            if sub != sub_k(x, y, k) {
                report.mismatches.push(format!("subcontract vs sub_{k} on {x}  <<  {y}"));
            }
            for f in synth(x, y).iter().chain(orchs) {
                report.instances += 1;
                let tb = orch_check(f, x, y);
                if tb != orch_check_k(f, x, y, k) || tb != orch_check_plain(f, x, y) {
                    report.mismatches.push(format!("orch_check vs orch_check_{k} on {f} : {x}  ~|  {y}"));
                }
            }
        }
    }
    report
}

/// Outcome of the subcontract property checks.
#[derive(Clone, Debug, Default)]
pub struct SubcontractReport {
    pub pairs: usize,
    pub related: usize,
    /// Functor applications checked.
    pub functor_triples: usize,
    pub failures: Vec<String>,
}

/// Checks reflexivity, substitutability, the quasi-dual bridge and functor
/// soundness over all pairs of `servers`, with clients drawn from
/// `clients`.
pub fn subcontract_check(servers: &[Contract], clients: &[Contract]) -> SubcontractReport {
    let mut report = SubcontractReport::default();
    let mut compliant: HashMap<usize, Vec<(usize, Vec<Orch>)>> = HashMap::new();
    for (si, s) in servers.iter().enumerate() {
        let entry = compliant.entry(si).or_default();
        for (ci, c) in clients.iter().enumerate() {
            let fs = synth(c, s);
            if !fs.is_empty() {
                entry.push((ci, fs));
            }
        }
    }
    for (si, s) in servers.iter().enumerate() {
        if sub_prove(&SubEnv::new(), &SubJudgment::new(s, s)).is_none() {
            report.failures.push(format!("not reflexive on {s}"));
        }
        for (ti, t) in servers.iter().enumerate() {
            report.pairs += 1;
            let Some(d) = sub_prove(&SubEnv::new(), &SubJudgment::new(s, t)) else { continue };
            report.related += 1;
            if !crate::compliance::ac(&s.quasi_dual(), t) {
                report.failures.push(format!("quasi-dual bridge fails on {s}  <<  {t}"));
            }
            let functor = match compile_functor(&d) {
                Ok(functor) => functor,
                Err(e) => {
                    report.failures.push(format!("compile_functor on {s}  <<  {t}: {e}"));
                    continue;
                }
            };
            let upper_ok: HashSet<usize> = compliant[&ti].iter().map(|(ci, _)| *ci).collect();
            for (ci, fs) in &compliant[&si] {
                if !upper_ok.contains(ci) {
                    report.failures.push(format!("substitutability fails: {} with {s}  <<  {t}", clients[*ci]));
                }
                for f in fs {
                    report.functor_triples += 1;
                    let g = apply_functor(&functor, f);
                    if !orch_check(&g, &clients[*ci], t) {
                        report.failures.push(format!("F({f}) = {g} fails for {}  ~|  {t}", clients[*ci]));
                    }
                }
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(alphabet: usize, depth: usize) -> EnumSpec {
        EnumSpec { alphabet, max_depth: depth, ..EnumSpec::default() }
    }

    #[test]
    fn depth_zero_is_success_only() {
        assert_eq!(enumerate_contracts(&spec(2, 0)).unwrap(), vec![Contract::Success]);
    }

    #[test]
    fn single_name_depth_one() {
        let got: Vec<String> = enumerate_contracts(&spec(1, 1)).unwrap().iter().map(|c| c.to_string()).collect();
        assert_eq!(got, ["1", "?a", "!a"]);
    }

    #[test]
    fn cap_is_enforced() {
        let s = EnumSpec { cap: 100, ..spec(2, 2) };
        assert_eq!(enumerate_contracts(&s).unwrap_err(), TestkitError::CapExceeded(100));
    }

    #[test]
    fn samples_are_recursive_and_valid() {
        let s = EnumSpec { max_depth: 3, ..EnumSpec::default() };
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..200 {
            let c = sample_recursive(&mut rng, &s);
            assert!(c.has_rec());
            assert!(c.validate().is_ok(), "{c}");
        }
    }

    #[test]
    fn bounded_pairs_fall_back_to_a_size_slice() {
        let (pairs, scope) = bounded_pairs(&spec(2, 1), 100).unwrap();
        assert_eq!((pairs.len(), scope.size_bound), (64, None));
        let (pairs, scope) = bounded_pairs(&spec(2, 3), 250_000).unwrap();
        assert_eq!((scope.exhaustive_depth, scope.size_bound), (2, Some(4)));
        assert_eq!(pairs.len(), scope.pairs);
        assert!(pairs.len() <= 250_000);
    }

    #[test]
    fn depth_one_orchestrators() {
        // 1, four `+` actions, and the fifteen non-empty sets of plain actions.
        assert_eq!(enumerate_orchs(&spec(2, 1), 1).len(), 20);
    }
}
