//! Affectible compliance: the derivation system, its proof search, the
//! stratified approximants of the coinductive relation, retractable
//! compliance over the rollback semantics, and a derivation validator.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde_json::{json, Value};
use thiserror::Error;

use crate::contract::{Contract, ContractTag, Name};
use crate::parse::{json_node, JsonError};
use crate::regular::CanonicalKey;
use crate::semantics::{rbk_system_steps, RbkRule, RbkSystem};

/// A compliance judgment `client ~| server`. Both sides are stored with
/// recursion at the root unfolded.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Judgment {
    pub client: Contract,
    pub server: Contract,
}

pub type JudgmentKey = (CanonicalKey<ContractTag>, CanonicalKey<ContractTag>);

impl Judgment {
    pub fn new(client: &Contract, server: &Contract) -> Judgment {
        Judgment { client: client.unfold_head(), server: server.unfold_head() }
    }

    pub fn key(&self) -> JudgmentKey {
        (self.client.canonical_key(), self.server.canonical_key())
    }

    pub fn equal_regular(&self, other: &Judgment) -> bool {
        self.client.equal_regular(&other.client) && self.server.equal_regular(&other.server)
    }

    pub fn to_json(&self) -> Value {
        json!({ "client": self.client.to_string(), "server": self.server.to_string() })
    }
}

impl fmt::Display for Judgment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}  ~|  {}", self.client, self.server)
    }
}

/// A finite set of judgments, with membership up to tree equality.
#[derive(Clone, Debug, Default)]
pub struct Environment {
    entries: Vec<Judgment>,
    keys: HashSet<JudgmentKey>,
}

impl Environment {
    pub fn new() -> Environment {
        Environment::default()
    }

    pub fn contains(&self, j: &Judgment) -> bool {
        self.keys.contains(&j.key())
    }

    /// This environment with `j` added.
    pub fn extended(&self, j: &Judgment) -> Environment {
        let mut out = self.clone();
        if out.keys.insert(j.key()) {
            out.entries.push(j.clone());
        }
        out
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Judgment] {
        &self.entries
    }

    pub fn same_set(&self, other: &Environment) -> bool {
        self.keys == other.keys
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rule {
    Ax,
    Hyp,
    /// Affectible or input choice against its complement: one branch.
    PlusPlus,
    /// Client internal choice against server input choice.
    OplusPlus,
    /// Client input choice against server internal choice.
    PlusOplus,
}

impl Rule {
    pub fn name(&self) -> &'static str {
        match self {
            Rule::Ax => "Ax",
            Rule::Hyp => "Hyp",
            Rule::PlusPlus => "+.+",
            Rule::OplusPlus => "(+).+",
            Rule::PlusOplus => "+.(+)",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

/// A derivation tree of the compliance system. Every node records its own
/// environment so that a derivation can be validated in isolation.
#[derive(Clone, Debug)]
pub struct Derivation {
    pub rule: Rule,
    pub env: Environment,
    pub judgment: Judgment,
    pub premises: Vec<Derivation>,
    /// The branch selected by a `+.+` node.
    pub branch: Option<Name>,
}

impl Derivation {
    /// Rules of the nodes in pre-order.
    pub fn rule_sequence(&self) -> Vec<Rule> {
        let mut out = vec![self.rule];
        for p in &self.premises {
            out.extend(p.rule_sequence());
        }
        out
    }

    pub fn node_count(&self) -> usize {
        1 + self.premises.iter().map(Derivation::node_count).sum::<usize>()
    }

    pub fn height(&self) -> usize {
        1 + self.premises.iter().map(Derivation::height).max().unwrap_or(0)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "rule": self.rule.name(),
            "judgment": self.judgment.to_json(),
            "premises": self.premises.iter().map(Derivation::to_json).collect::<Vec<_>>(),
            "branch": self.branch,
        })
    }

    /// Reads a derivation from the form produced by [`Derivation::to_json`].
    /// Environments are rebuilt from the empty root environment. The result
    /// is not validated; use [`check_derivation`].
    pub fn from_json(v: &Value) -> Result<Derivation, JsonError> {
        Derivation::from_json_in(v, &Environment::new())
    }

    fn from_json_in(v: &Value, env: &Environment) -> Result<Derivation, JsonError> {
        let node = json_node(v, "client", "server")?;
        let rule = [Rule::Ax, Rule::Hyp, Rule::PlusPlus, Rule::OplusPlus, Rule::PlusOplus]
            .into_iter()
            .find(|r| r.name() == node.rule)
            .ok_or_else(|| JsonError::UnknownRule(node.rule.to_string()))?;
        let judgment = Judgment::new(&node.left, &node.right);
        let inner = env.extended(&judgment);
        let premises = node
            .premises
            .iter()
            .map(|p| Derivation::from_json_in(p, &inner))
            .collect::<Result<_, _>>()?;
        Ok(Derivation { rule, env: env.clone(), judgment, premises, branch: node.branch })
    }

    fn write_tree(&self, f: &mut fmt::Formatter<'_>, indent: usize) -> fmt::Result {
        let branch = self.branch.as_ref().map(|b| format!(" [{b}]")).unwrap_or_default();
        writeln!(f, "{:indent$}({}){}  {} |> {}", "", self.rule, branch, self.env.len(), self.judgment)?;
        for p in &self.premises {
            p.write_tree(f, indent + 2)?;
        }
        Ok(())
    }
}

impl fmt::Display for Derivation {
    /// One node per line, premises indented, with the environment size.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_tree(f, 0)
    }
}

/// The branches of an external sum seen as `sum alpha_i.rho_i`, with the
/// polarity of its actions (`true` for outputs). Lone internal outputs count
/// as one-branch sums.
fn external_view(c: &Contract) -> Option<(bool, &[(Name, Contract)])> {
    match c {
        Contract::Input(bs) => Some((false, bs)),
        Contract::Affectible(bs) => Some((true, bs)),
        Contract::Internal(bs) if bs.len() == 1 => Some((true, bs)),
        _ => None,
    }
}

fn labels_subset(small: &[(Name, Contract)], big: &[(Name, Contract)]) -> bool {
    small.iter().all(|(a, _)| big.iter().any(|(b, _)| a == b))
}

fn branch_of<'a>(bs: &'a [(Name, Contract)], a: &str) -> &'a Contract {
    &bs.iter().find(|(n, _)| n == a).expect("label present").1
}

/// Proof search for `env |> client ~| server`. Rules are tried in the
/// order Ax, Hyp, (+).+, +.(+), +.+ and branches of `+.+` in ascending
/// label order.
pub fn prove(env: &Environment, j: &Judgment) -> Option<Derivation> {
    let node = |rule, premises, branch| Derivation { rule, env: env.clone(), judgment: j.clone(), premises, branch };
    if j.client.is_success() {
        return Some(node(Rule::Ax, Vec::new(), None));
    }
    if env.contains(j) {
        return Some(node(Rule::Hyp, Vec::new(), None));
    }
    let inner = env.extended(j);
    match (&j.client, &j.server) {
        (Contract::Internal(ci), Contract::Input(sj)) => {
            if !labels_subset(ci, sj) {
                return None;
            }
            let premises = ci
                .iter()
                .map(|(a, k)| prove(&inner, &Judgment::new(k, branch_of(sj, a))))
                .collect::<Option<Vec<_>>>()?;
            return Some(node(Rule::OplusPlus, premises, None));
        }
        (Contract::Input(ci), Contract::Internal(sj)) => {
            if !labels_subset(sj, ci) {
                return None;
            }
            let premises = sj
                .iter()
                .map(|(a, k)| prove(&inner, &Judgment::new(branch_of(ci, a), k)))
                .collect::<Option<Vec<_>>>()?;
            return Some(node(Rule::PlusOplus, premises, None));
        }
        _ => {}
    }
    let (pc, cb) = external_view(&j.client)?;
    let (ps, sb) = external_view(&j.server)?;
    if pc == ps {
        return None;
    }
    for (a, kc) in cb {
        if let Some((_, ks)) = sb.iter().find(|(b, _)| a == b) {
            if let Some(d) = prove(&inner, &Judgment::new(kc, ks)) {
                return Some(node(Rule::PlusPlus, vec![d], Some(a.clone())));
            }
        }
    }
    None
}

/// Decides affectible compliance by proof search from the empty
/// environment.
pub fn ac(client: &Contract, server: &Contract) -> bool {
    prove(&Environment::new(), &Judgment::new(client, server)).is_some()
}

/// The `k`-th stratified approximant of affectible compliance.
pub fn ac_k(client: &Contract, server: &Contract, k: usize) -> bool {
    let mut memo = HashMap::new();
    ac_k_memo(&client.unfold_head(), &server.unfold_head(), k, &mut memo)
}

fn ac_k_memo(c: &Contract, s: &Contract, k: usize, memo: &mut HashMap<(Contract, Contract, usize), bool>) -> bool {
    if k == 0 || c.is_success() {
        return true;
    }
    let key = (c.clone(), s.clone(), k);
    if let Some(v) = memo.get(&key) {
        return *v;
    }
    let mut rec = |x: &Contract, y: &Contract| ac_k_memo(&x.unfold_head(), &y.unfold_head(), k - 1, memo);
    let result = match (c, s) {
        (Contract::Internal(ci), Contract::Input(sj)) if labels_subset(ci, sj) => {
            ci.iter().all(|(a, kc)| rec(kc, branch_of(sj, a)))
        }
        (Contract::Input(ci), Contract::Internal(sj)) if labels_subset(sj, ci) => {
            sj.iter().all(|(a, ks)| rec(branch_of(ci, a), ks))
        }
        _ => false,
    } || match (external_view(c), external_view(s)) {
        (Some((pc, cb)), Some((ps, sb))) if pc != ps => cb
            .iter()
            .any(|(a, kc)| sb.iter().find(|(b, _)| a == b).is_some_and(|(_, ks)| rec(kc, ks))),
        _ => false,
    };
    memo.insert(key, result);
    result
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RbkMode {
    /// Explore every run of the rollback semantics.
    Exhaustive,
    /// Decide through affectible compliance.
    ViaAc,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ComplianceError {
    #[error("infinite rollback state space; use via-ac")]
    InfiniteRollback,
}

/// The graph of rollback states reachable from a system.
#[derive(Clone, Debug)]
pub struct RbkExploration {
    pub states: Vec<RbkSystem>,
    pub edges: Vec<(usize, RbkRule, usize)>,
    /// States without transitions.
    pub stuck: Vec<usize>,
}

impl RbkExploration {
    pub fn successors(&self, v: usize) -> impl Iterator<Item = &(usize, RbkRule, usize)> {
        self.edges.iter().filter(move |(from, _, _)| *from == v)
    }

    /// Whether every stuck state has a successful client.
    pub fn all_stuck_successful(&self) -> bool {
        self.stuck.iter().all(|v| self.states[*v].client.is_success())
    }
}

/// Explores the rollback semantics of `client || server` from empty
/// histories. Only defined on recursion-free contracts.
pub fn rbk_explore(client: &Contract, server: &Contract) -> Result<RbkExploration, ComplianceError> {
    if client.has_rec() || server.has_rec() {
        return Err(ComplianceError::InfiniteRollback);
    }
    let start = RbkSystem::new(client, server);
    let mut index: HashMap<RbkSystem, usize> = HashMap::from([(start.clone(), 0)]);
    let mut states = vec![start];
    let mut edges = Vec::new();
    let mut stuck = Vec::new();
    let mut stack = vec![0usize];
    while let Some(v) = stack.pop() {
        let steps = rbk_system_steps(&states[v]);
        if steps.is_empty() {
            stuck.push(v);
        }
        for (rule, next) in steps {
            let w = match index.get(&next) {
                Some(w) => *w,
                None => {
                    let w = states.len();
                    index.insert(next.clone(), w);
                    states.push(next);
                    stack.push(w);
                    w
                }
            };
            edges.push((v, rule, w));
        }
    }
    stuck.sort_unstable();
    Ok(RbkExploration { states, edges, stuck })
}

/// Retractable compliance: every maximal rollback run ends with a
/// successful client.
pub fn rbk_compliance(client: &Contract, server: &Contract, mode: RbkMode) -> Result<bool, ComplianceError> {
    match mode {
        RbkMode::Exhaustive => Ok(rbk_explore(client, server)?.all_stuck_successful()),
        RbkMode::ViaAc => Ok(ac(client, server)),
    }
}

/// Checks that every node of `d` is an instance of its rule, including
/// side conditions and the environment threading of premises.
pub fn check_derivation(d: &Derivation) -> bool {
    let j = &d.judgment;
    let premises_ok = |expected: Vec<Judgment>| {
        let inner = d.env.extended(j);
        d.premises.len() == expected.len()
            && d.premises.iter().zip(&expected).all(|(p, e)| {
                p.env.same_set(&inner) && p.judgment.equal_regular(e) && check_derivation(p)
            })
    };
    match d.rule {
        Rule::Ax => d.premises.is_empty() && j.client.unfold_head().is_success(),
        Rule::Hyp => d.premises.is_empty() && d.env.contains(j),
        Rule::OplusPlus => match (&j.client.unfold_head(), &j.server.unfold_head()) {
            (Contract::Internal(ci), Contract::Input(sj)) if labels_subset(ci, sj) => {
                premises_ok(ci.iter().map(|(a, k)| Judgment::new(k, branch_of(sj, a))).collect())
            }
            _ => false,
        },
        Rule::PlusOplus => match (&j.client.unfold_head(), &j.server.unfold_head()) {
            (Contract::Input(ci), Contract::Internal(sj)) if labels_subset(sj, ci) => {
                premises_ok(sj.iter().map(|(a, k)| Judgment::new(branch_of(ci, a), k)).collect())
            }
            _ => false,
        },
        Rule::PlusPlus => {
            let (c, s) = (j.client.unfold_head(), j.server.unfold_head());
            let (Some((pc, cb)), Some((ps, sb)), Some(a)) = (external_view(&c), external_view(&s), &d.branch) else {
                return false;
            };
            match (pc != ps, cb.iter().find(|(n, _)| n == a), sb.iter().find(|(n, _)| n == a)) {
                (true, Some((_, kc)), Some((_, ks))) => premises_ok(vec![Judgment::new(kc, ks)]),
                _ => false,
            }
        }
    }
}
