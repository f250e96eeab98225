//! Orchestrator synthesis, orchestrated compliance checking, and the
//! conversions between compliance derivations and orchestrators.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use serde_json::{json, Value};
use thiserror::Error;

use crate::compliance::{Derivation, Environment, Judgment, JudgmentKey, Rule};
use crate::contract::{Contract, Name};
use crate::orch::{Dir, OAct, Orch};
use crate::semantics::{
    orch_big_steps, orch_steps, silent_normal_forms, tb_orch_steps, BufferedContract, OrchLabel, OrchSystem,
    TBOrchConfig,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OrchestratorError {
    #[error("invalid derivation: {0}")]
    InvalidDerivation(String),
}

/// Tree equality of closed orchestrators, ignoring vacuous binders and the
/// order of disjuncts.
pub fn orch_equal_regular(f: &Orch, g: &Orch) -> bool {
    f.equal_regular(g)
}

/// The external sum view used by the `+.+` cases: polarity (`true` for
/// outputs) and branches. A lone internal output counts as a one-branch sum.
fn external_view(c: &Contract) -> Option<(bool, &[(Name, Contract)])> {
    match c {
        Contract::Input(bs) => Some((false, bs)),
        Contract::Affectible(bs) => Some((true, bs)),
        Contract::Internal(bs) if bs.len() == 1 => Some((true, bs)),
        _ => None,
    }
}

fn branch_of<'a>(bs: &'a [(Name, Contract)], a: &str) -> Option<&'a Contract> {
    bs.iter().find(|(n, _)| n == a).map(|(_, k)| k)
}

fn subset(small: &[(Name, Contract)], big: &[(Name, Contract)]) -> bool {
    small.iter().all(|(a, _)| branch_of(big, a).is_some())
}

/// The orchestrator action that lets the server perform the complement of
/// a client action on `name`.
fn action_for(name: &str, client_outputs: bool) -> OAct {
    if client_outputs {
        OAct::server_in(name)
    } else {
        OAct::server_out(name)
    }
}

// ---------------------------------------------------------------------------
// Synthesis
// ---------------------------------------------------------------------------

/// Synthesis environment: orchestrator variables bound to judgments.
type SynthEnv = Vec<(String, JudgmentKey)>;

/// All orchestrators built by the synthesis algorithm from the empty
/// environment, deduplicated up to tree equality. The set is empty exactly
/// when no orchestrator exists.
pub fn synth(client: &Contract, server: &Contract) -> Vec<Orch> {
    let mut fresh = 0;
    let all = synth_env(&Vec::new(), &client.unfold_head(), &server.unfold_head(), &mut fresh);
    let mut seen = HashSet::new();
    all.into_iter().filter(|f| seen.insert(f.canonical_key())).collect()
}

fn fresh_var(fresh: &mut usize) -> String {
    let x = format!("x{fresh}");
    *fresh += 1;
    x
}

fn synth_env(env: &SynthEnv, c: &Contract, s: &Contract, fresh: &mut usize) -> Vec<Orch> {
    let key = Judgment::new(c, s).key();
    if let Some((x, _)) = env.iter().find(|(_, k)| *k == key) {
        return vec![Orch::var(x)];
    }
    if c.is_success() {
        return vec![Orch::Idle];
    }
    let extend = |x: &str| {
        let mut e = env.clone();
        e.push((x.to_string(), key.clone()));
        e
    };
    let disjunctions = |x: String, entries: Vec<(OAct, Vec<Orch>)>| -> Vec<Orch> {
        let mut out = Vec::new();
        cartesian(&entries, 0, &mut Vec::new(), &mut |picked| {
            let body = Orch::disj(picked.to_vec()).expect("distinct actions");
            out.push(Orch::rec(&x, body));
        });
        out
    };
    match (c, s) {
        (Contract::Internal(ci), Contract::Input(sj)) if subset(ci, sj) => {
            let x = fresh_var(fresh);
            let env2 = extend(&x);
            let mut entries = Vec::new();
            for (a, kc) in ci {
                let ks = branch_of(sj, a).expect("subset");
                entries.push((OAct::server_in(a), synth_env(&env2, &kc.unfold_head(), &ks.unfold_head(), fresh)));
            }
            return disjunctions(x, entries);
        }
        (Contract::Input(ci), Contract::Internal(sj)) if subset(sj, ci) => {
            let x = fresh_var(fresh);
            let env2 = extend(&x);
            let mut entries = Vec::new();
            for (a, ks) in sj {
                let kc = branch_of(ci, a).expect("subset");
                entries.push((OAct::server_out(a), synth_env(&env2, &kc.unfold_head(), &ks.unfold_head(), fresh)));
            }
            return disjunctions(x, entries);
        }
        (Contract::Affectible(cb), Contract::Input(sb)) | (Contract::Input(cb), Contract::Affectible(sb)) => {
            let client_outputs = matches!(c, Contract::Affectible(_));
            let x = fresh_var(fresh);
            let env2 = extend(&x);
            let mut out = Vec::new();
            for (a, kc) in cb {
                if let Some(ks) = branch_of(sb, a) {
                    for f in synth_env(&env2, &kc.unfold_head(), &ks.unfold_head(), fresh) {
                        out.push(Orch::rec(&x, Orch::plus(action_for(a, client_outputs), f)));
                    }
                }
            }
            return out;
        }
        _ => {}
    }
    Vec::new()
}

fn cartesian(entries: &[(OAct, Vec<Orch>)], i: usize, picked: &mut Vec<(OAct, Orch)>, emit: &mut dyn FnMut(&[(OAct, Orch)])) {
    if i == entries.len() {
        emit(picked);
        return;
    }
    let (act, options) = &entries[i];
    for f in options {
        picked.push((act.clone(), f.clone()));
        cartesian(entries, i + 1, picked, emit);
        picked.pop();
    }
}

// ---------------------------------------------------------------------------
// Orchestrated compliance
// ---------------------------------------------------------------------------

/// Orchestrated compliance checked on the turn-based orchestrated LTS:
/// every reachable configuration without moves has a terminated client.
pub fn orch_check(f: &Orch, client: &Contract, server: &Contract) -> bool {
    let start = TBOrchConfig::new(client, f, server);
    let mut seen = HashSet::new();
    let mut queue = VecDeque::from([start]);
    while let Some(cfg) = queue.pop_front() {
        if !seen.insert(cfg.key()) {
            continue;
        }
        let steps = tb_orch_steps(&cfg);
        if steps.is_empty() && cfg.client != BufferedContract::Zero {
            return false;
        }
        queue.extend(steps.into_iter().map(|(_, n)| n));
    }
    true
}

/// Orchestrated compliance checked on the plain orchestrated LTS: every
/// reachable state without moves has a successful client.
pub fn orch_check_plain(f: &Orch, client: &Contract, server: &Contract) -> bool {
    let start = OrchSystem::new(client, f, server);
    let mut seen = HashSet::new();
    let mut queue = VecDeque::from([start]);
    while let Some(sys) = queue.pop_front() {
        if !seen.insert(sys.key()) {
            continue;
        }
        let steps = orch_steps(&sys);
        if steps.is_empty() && !sys.client.is_success() {
            return false;
        }
        queue.extend(steps.into_iter().map(|(_, n)| n));
    }
    true
}

/// The `k`-th stratified approximant of orchestrated compliance over the
/// big-step relation. Each silent resolution of the current state must be
/// able to synchronize, and every big-step successor must be compliant at
/// level `k - 1`.
pub fn orch_check_k(f: &Orch, client: &Contract, server: &Contract, k: usize) -> bool {
    let mut memo = HashMap::new();
    orch_check_k_memo(&OrchSystem::new(client, f, server), k, &mut memo)
}

fn orch_check_k_memo(sys: &OrchSystem, k: usize, memo: &mut HashMap<(OrchSystem, usize), bool>) -> bool {
    if k == 0 || sys.client.is_success() {
        return true;
    }
    if let Some(v) = memo.get(&(sys.clone(), k)) {
        return *v;
    }
    let progress = silent_normal_forms(sys).iter().all(|n| {
        orch_steps(n).iter().any(|(l, _)| !matches!(l, OrchLabel::Silent(_)))
    });
    let result = progress && orch_big_steps(sys).iter().all(|n| orch_check_k_memo(n, k - 1, memo));
    memo.insert((sys.clone(), k), result);
    result
}

// ---------------------------------------------------------------------------
// From derivations to orchestrators
// ---------------------------------------------------------------------------

/// A derivation of the orchestrated system: judgments `f : client ~| server`
/// under an environment of variable assumptions.
#[derive(Clone, Debug)]
pub struct OrchDerivation {
    pub rule: Rule,
    pub env: Vec<(String, Judgment)>,
    pub orch: Orch,
    pub judgment: Judgment,
    pub premises: Vec<OrchDerivation>,
}

impl OrchDerivation {
    pub fn to_json(&self) -> Value {
        json!({
            "rule": self.rule.name(),
            "orchestrator": self.orch.to_string(),
            "judgment": self.judgment.to_json(),
            "premises": self.premises.iter().map(OrchDerivation::to_json).collect::<Vec<_>>(),
        })
    }

    /// Checks that variables are used only under a matching assumption and
    /// that every node's orchestrator is assembled from its premises.
    pub fn is_well_formed(&self) -> bool {
        let premises_ok = self.premises.iter().all(OrchDerivation::is_well_formed);
        match (&self.rule, &self.orch) {
            (Rule::Ax, Orch::Idle) => self.judgment.client.is_success(),
            (Rule::Hyp, Orch::Var(x)) => {
                self.env.iter().any(|(y, j)| y == x && j.equal_regular(&self.judgment))
            }
            (Rule::PlusPlus | Rule::OplusPlus | Rule::PlusOplus, Orch::Rec(x, body)) => {
                let conts: Vec<&Orch> = match &**body {
                    Orch::Plus(_, k) => vec![&**k],
                    Orch::Disj(es) => es.iter().map(|(_, k)| k).collect(),
                    _ => return false,
                };
                premises_ok
                    && conts.len() == self.premises.len()
                    && self.premises.iter().zip(conts).all(|(p, k)| {
                        p.orch == *k
                            && p.env.len() == self.env.len() + 1
                            && p.env.last().is_some_and(|(y, j)| y == x && j.equal_regular(&self.judgment))
                    })
            }
            _ => false,
        }
    }
}

impl fmt::Display for OrchDerivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn go(d: &OrchDerivation, f: &mut fmt::Formatter<'_>, indent: usize) -> fmt::Result {
            writeln!(f, "{:indent$}({})  {} : {}", "", d.rule, d.orch, d.judgment)?;
            d.premises.iter().try_for_each(|p| go(p, f, indent + 2))
        }
        go(self, f, 0)
    }
}

/// The orchestrator extracted from a derivation with empty root
/// environment, together with the corresponding orchestrated derivation.
/// Every rule node introduces a fresh, possibly vacuous, binder.
pub fn derivation_to_orch(d: &Derivation) -> Result<(Orch, OrchDerivation), OrchestratorError> {
    if !d.env.is_empty() {
        return Err(OrchestratorError::InvalidDerivation("root environment is not empty".into()));
    }
    let mut fresh = 0;
    let od = to_orch_aux(d, &Vec::new(), &mut fresh)?;
    Ok((od.orch.clone(), od))
}

fn to_orch_aux(
    d: &Derivation,
    env: &Vec<(String, Judgment)>,
    fresh: &mut usize,
) -> Result<OrchDerivation, OrchestratorError> {
    let j = &d.judgment;
    let leaf = |orch| OrchDerivation { rule: d.rule, env: env.clone(), orch, judgment: j.clone(), premises: Vec::new() };
    let invalid = |msg: &str| Err(OrchestratorError::InvalidDerivation(format!("{msg} at {j}")));
    match d.rule {
        Rule::Ax if j.client.is_success() => return Ok(leaf(Orch::Idle)),
        Rule::Ax => return invalid("axiom with unsuccessful client"),
        Rule::Hyp => {
            return match env.iter().find(|(_, h)| h.equal_regular(j)) {
                Some((x, _)) => Ok(leaf(Orch::var(x))),
                None => invalid("hypothesis without assumption"),
            }
        }
        _ => {}
    }
    let x = fresh_var(fresh);
    let mut inner = env.clone();
    inner.push((x.clone(), j.clone()));
    let premises = d
        .premises
        .iter()
        .map(|p| to_orch_aux(p, &inner, fresh))
        .collect::<Result<Vec<_>, _>>()?;
    let body = match d.rule {
        Rule::PlusPlus => {
            let (Some((pc, _)), Some((ps, _)), Some(a), [p]) =
                (external_view(&j.client), external_view(&j.server), &d.branch, premises.as_slice())
            else {
                return invalid("malformed +.+ node");
            };
            if pc == ps {
                return invalid("+.+ on equal polarities");
            }
            let act = action_for(a, pc);
            let output_is_internal =
                matches!(if pc { &j.client } else { &j.server }, Contract::Internal(_));
            if output_is_internal {
                Orch::act(act, p.orch.clone())
            } else {
                Orch::plus(act, p.orch.clone())
            }
        }
        Rule::OplusPlus | Rule::PlusOplus => {
            let (bs, client_outputs) = match (d.rule, &j.client, &j.server) {
                (Rule::OplusPlus, Contract::Internal(bs), _) => (bs, true),
                (Rule::PlusOplus, _, Contract::Internal(bs)) => (bs, false),
                _ => return invalid("choice rule on non-choice contracts"),
            };
            if bs.len() != premises.len() {
                return invalid("wrong number of premises");
            }
            let entries = bs
                .iter()
                .zip(&premises)
                .map(|((a, _), p)| (action_for(a, client_outputs), p.orch.clone()))
                .collect();
            Orch::disj(entries).map_err(|e| OrchestratorError::InvalidDerivation(e.to_string()))?
        }
        Rule::Ax | Rule::Hyp => unreachable!("handled above"),
    };
    Ok(OrchDerivation { rule: d.rule, env: env.clone(), orch: Orch::rec(&x, body), judgment: j.clone(), premises })
}

// ---------------------------------------------------------------------------
// From orchestrators to derivations
// ---------------------------------------------------------------------------

/// Builds a compliance derivation guided by an orchestrator. Fails when the
/// orchestrator does not witness compliance of the pair.
pub fn o2d(f: &Orch, client: &Contract, server: &Contract) -> Option<Derivation> {
    o2d_aux(f, &Environment::new(), &Judgment::new(client, server))
}

fn o2d_aux(f: &Orch, env: &Environment, j: &Judgment) -> Option<Derivation> {
    let node = |rule, premises, branch| Derivation { rule, env: env.clone(), judgment: j.clone(), premises, branch };
    if j.client.is_success() {
        return Some(node(Rule::Ax, Vec::new(), None));
    }
    if env.contains(j) {
        return Some(node(Rule::Hyp, Vec::new(), None));
    }
    let inner = env.extended(j);
    let f = f.unfold_head();
    let prefix = match &f {
        Orch::Plus(act, k) => Some((act, &**k)),
        Orch::Disj(es) if es.len() == 1 => Some((&es[0].0, &es[0].1)),
        _ => None,
    };
    if let (Some((act, k)), Some((pc, cb)), Some((ps, sb))) =
        (prefix, external_view(&j.client), external_view(&j.server))
    {
        if pc != ps && act.dir == action_for(&act.name, pc).dir {
            if let (Some(kc), Some(ks)) = (branch_of(cb, &act.name), branch_of(sb, &act.name)) {
                if let Some(d) = o2d_aux(k, &inner, &Judgment::new(kc, ks)) {
                    return Some(node(Rule::PlusPlus, vec![d], Some(act.name.clone())));
                }
            }
        }
    }
    let Orch::Disj(es) = &f else { return None };
    let cont = |a: &str, dir: Dir| es.iter().find(|(act, _)| act.name == a && act.dir == dir).map(|(_, k)| k);
    match (&j.client, &j.server) {
        (Contract::Internal(ci), Contract::Input(sj)) if subset(ci, sj) => {
            let premises = ci
                .iter()
                .map(|(a, kc)| o2d_aux(cont(a, Dir::ServerIn)?, &inner, &Judgment::new(kc, branch_of(sj, a)?)))
                .collect::<Option<Vec<_>>>()?;
            Some(node(Rule::OplusPlus, premises, None))
        }
        (Contract::Input(ci), Contract::Internal(sj)) if subset(sj, ci) => {
            let premises = sj
                .iter()
                .map(|(a, ks)| o2d_aux(cont(a, Dir::ServerOut)?, &inner, &Judgment::new(branch_of(ci, a)?, ks)))
                .collect::<Option<Vec<_>>>()?;
            Some(node(Rule::PlusOplus, premises, None))
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compliance::{check_derivation, prove};
    use crate::parse::{parse_contract, parse_orch};

    fn c(s: &str) -> Contract {
        parse_contract(s).unwrap()
    }

    #[test]
    fn success_client_synthesizes_idle() {
        assert_eq!(synth(&Contract::Success, &c("?a")), vec![Orch::Idle]);
    }

    #[test]
    fn non_compliant_pair_synthesizes_nothing() {
        assert!(synth(&c("?a"), &c("!b (+) !c")).is_empty());
    }

    #[test]
    fn affectible_choice_yields_one_orchestrator_per_shared_label() {
        let fs = synth(&c("!a + !b"), &c("?a + ?b"));
        assert_eq!(fs.len(), 2);
        assert!(fs.iter().all(|f| orch_check(f, &c("!a + !b"), &c("?a + ?b"))));
    }

    #[test]
    fn idle_blocks_plain_synchronization() {
        assert!(!orch_check(&Orch::Idle, &c("?a"), &c("!a")));
        assert!(!orch_check_k(&Orch::Idle, &c("?a"), &c("!a"), 1));
        assert!(orch_check_k(&Orch::Idle, &c("?a"), &c("!a"), 0));
    }

    #[test]
    fn silent_resolution_must_be_covered() {
        let f = parse_orch("<a,!a>").unwrap();
        let (client, server) = (c("!a (+) !b"), c("?a"));
        assert!(!orch_check(&f, &client, &server));
        assert!(!orch_check_plain(&f, &client, &server));
        assert!(!orch_check_k(&f, &client, &server, 2));
    }

    #[test]
    fn recursive_round_trip() {
        let (client, server) = (c("rec x. !a.?b.x + !c"), c("rec y. ?a.!b.y"));
        let d = prove(&Environment::new(), &Judgment::new(&client, &server)).unwrap();
        let (f, od) = derivation_to_orch(&d).unwrap();
        assert!(f.is_closed());
        assert!(od.is_well_formed());
        assert!(orch_check(&f, &client, &server));
        let back = o2d(&f, &client, &server).unwrap();
        assert!(check_derivation(&back));
    }

    #[test]
    fn hypothesis_without_assumption_is_an_error() {
        let j = Judgment::new(&c("?a"), &c("!a"));
        let d = Derivation { rule: Rule::Hyp, env: Environment::new().extended(&j), judgment: j, premises: vec![], branch: None };
        let mut fresh = 0;
        assert!(to_orch_aux(&d, &Vec::new(), &mut fresh).is_err());
    }
}
