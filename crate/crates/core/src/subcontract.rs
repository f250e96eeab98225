//! The affectible subcontract relation: its derivation system and proof
//! search, stratified approximants, and the orchestrator functors obtained
//! from derivations.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde_json::{json, Value};
use thiserror::Error;

use crate::contract::{Contract, ContractTag, Name};
use crate::orch::{Dir, OAct, Orch, OrchTag};
use crate::parse::{json_node, JsonError};
use crate::regular::CanonicalKey;

/// A subcontract judgment `lower << upper`, stored with recursion at the
/// root unfolded.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SubJudgment {
    pub lower: Contract,
    pub upper: Contract,
}

type SubKey = (CanonicalKey<ContractTag>, CanonicalKey<ContractTag>);

impl SubJudgment {
    pub fn new(lower: &Contract, upper: &Contract) -> SubJudgment {
        SubJudgment { lower: lower.unfold_head(), upper: upper.unfold_head() }
    }

    fn key(&self) -> SubKey {
        (self.lower.canonical_key(), self.upper.canonical_key())
    }

    pub fn equal_regular(&self, other: &SubJudgment) -> bool {
        self.lower.equal_regular(&other.lower) && self.upper.equal_regular(&other.upper)
    }
}

impl fmt::Display for SubJudgment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}  <<  {}", self.lower, self.upper)
    }
}

/// A finite set of subcontract judgments, up to tree equality.
#[derive(Clone, Debug, Default)]
pub struct SubEnv {
    entries: Vec<SubJudgment>,
    keys: HashSet<SubKey>,
}

impl SubEnv {
    pub fn new() -> SubEnv {
        SubEnv::default()
    }

    pub fn contains(&self, j: &SubJudgment) -> bool {
        self.keys.contains(&j.key())
    }

    pub fn extended(&self, j: &SubJudgment) -> SubEnv {
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

    pub fn same_set(&self, other: &SubEnv) -> bool {
        self.keys == other.keys
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SubRule {
    Ax,
    Hyp,
    /// Internal choice below an affectible choice: one shared branch.
    OplusPlus,
    /// Input choice below a larger input choice.
    PlusPlusIn,
    /// Affectible output choice below a larger one.
    PlusPlusOut,
    /// Larger internal choice below a smaller one.
    OplusOplus,
}

impl SubRule {
    pub fn name(&self) -> &'static str {
        match self {
            SubRule::Ax => "Ax-<<",
            SubRule::Hyp => "Hyp-<<",
            SubRule::OplusPlus => "(+).+-<<",
            SubRule::PlusPlusIn => "+.+-<<-1",
            SubRule::PlusPlusOut => "+.+-<<-2",
            SubRule::OplusOplus => "(+).(+)-<<",
        }
    }
}

impl fmt::Display for SubRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

#[derive(Clone, Debug)]
pub struct SubDerivation {
    pub rule: SubRule,
    pub env: SubEnv,
    pub judgment: SubJudgment,
    pub premises: Vec<SubDerivation>,
    /// The shared branch chosen by a `(+).+-<<` node.
    pub branch: Option<Name>,
}

impl SubDerivation {
    pub fn rule_sequence(&self) -> Vec<SubRule> {
        let mut out = vec![self.rule];
        for p in &self.premises {
            out.extend(p.rule_sequence());
        }
        out
    }

    pub fn to_json(&self) -> Value {
        json!({
            "rule": self.rule.name(),
            "judgment": { "lower": self.judgment.lower.to_string(), "upper": self.judgment.upper.to_string() },
            "premises": self.premises.iter().map(SubDerivation::to_json).collect::<Vec<_>>(),
            "branch": self.branch,
        })
    }

    /// Reads a derivation from the form produced by
    /// [`SubDerivation::to_json`], rebuilding environments from the empty
    /// root environment. The result is not validated; use
    /// [`check_sub_derivation`].
    pub fn from_json(v: &Value) -> Result<SubDerivation, JsonError> {
        SubDerivation::from_json_in(v, &SubEnv::new())
    }

    fn from_json_in(v: &Value, env: &SubEnv) -> Result<SubDerivation, JsonError> {
        let node = json_node(v, "lower", "upper")?;
        let rule = [
            SubRule::Ax,
            SubRule::Hyp,
            SubRule::OplusPlus,
            SubRule::PlusPlusIn,
            SubRule::PlusPlusOut,
            SubRule::OplusOplus,
        ]
        .into_iter()
        .find(|r| r.name() == node.rule)
        .ok_or_else(|| JsonError::UnknownRule(node.rule.to_string()))?;
        let judgment = SubJudgment::new(&node.left, &node.right);
        let inner = env.extended(&judgment);
        let premises = node
            .premises
            .iter()
            .map(|p| SubDerivation::from_json_in(p, &inner))
            .collect::<Result<_, _>>()?;
        Ok(SubDerivation { rule, env: env.clone(), judgment, premises, branch: node.branch })
    }

    fn write_tree(&self, f: &mut fmt::Formatter<'_>, indent: usize) -> fmt::Result {
        let branch = self.branch.as_ref().map(|b| format!(" [{b}]")).unwrap_or_default();
        writeln!(f, "{:indent$}({}){}  {} |> {}", "", self.rule, branch, self.env.len(), self.judgment)?;
        self.premises.iter().try_for_each(|p| p.write_tree(f, indent + 2))
    }
}

impl fmt::Display for SubDerivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_tree(f, 0)
    }
}

fn output_view(c: &Contract) -> Option<&[(Name, Contract)]> {
    match c {
        Contract::Affectible(bs) => Some(bs),
        Contract::Internal(bs) if bs.len() == 1 => Some(bs),
        _ => None,
    }
}

fn branch_of<'a>(bs: &'a [(Name, Contract)], a: &str) -> Option<&'a Contract> {
    bs.iter().find(|(n, _)| n == a).map(|(_, k)| k)
}

fn subset(small: &[(Name, Contract)], big: &[(Name, Contract)]) -> bool {
    small.iter().all(|(a, _)| branch_of(big, a).is_some())
}

/// Proof search for `env |> lower << upper`, trying Ax, Hyp, `(+).+`,
/// the input and output forms of `+.+`, and `(+).(+)` in this order.
pub fn sub_prove(env: &SubEnv, j: &SubJudgment) -> Option<SubDerivation> {
    let node = |rule, premises, branch| SubDerivation { rule, env: env.clone(), judgment: j.clone(), premises, branch };
    if j.lower.is_success() {
        return Some(node(SubRule::Ax, Vec::new(), None));
    }
    if env.contains(j) {
        return Some(node(SubRule::Hyp, Vec::new(), None));
    }
    let inner = env.extended(j);
    let all = |pairs: Vec<(&Contract, &Contract)>| -> Option<Vec<SubDerivation>> {
        pairs.into_iter().map(|(l, u)| sub_prove(&inner, &SubJudgment::new(l, u))).collect()
    };
    if let (Contract::Internal(li), Contract::Affectible(uj)) = (&j.lower, &j.upper) {
        for (a, l) in li {
            if let Some(u) = branch_of(uj, a) {
                if let Some(d) = sub_prove(&inner, &SubJudgment::new(l, u)) {
                    return Some(node(SubRule::OplusPlus, vec![d], Some(a.clone())));
                }
            }
        }
    }
    if let (Contract::Input(li), Contract::Input(uj)) = (&j.lower, &j.upper) {
        if subset(li, uj) {
            if let Some(ps) = all(li.iter().map(|(a, l)| (l, branch_of(uj, a).expect("subset"))).collect()) {
                return Some(node(SubRule::PlusPlusIn, ps, None));
            }
        }
    }
    if let (Some(li), Some(uj)) = (output_view(&j.lower), output_view(&j.upper)) {
        let both_single = li.len() == 1 && uj.len() == 1;
        if !both_single && subset(li, uj) {
            if let Some(ps) = all(li.iter().map(|(a, l)| (l, branch_of(uj, a).expect("subset"))).collect()) {
                return Some(node(SubRule::PlusPlusOut, ps, None));
            }
        }
    }
    if let (Contract::Internal(li), Contract::Internal(uj)) = (&j.lower, &j.upper) {
        if subset(uj, li) {
            if let Some(ps) = all(uj.iter().map(|(a, u)| (branch_of(li, a).expect("subset"), u)).collect()) {
                return Some(node(SubRule::OplusOplus, ps, None));
            }
        }
    }
    None
}

/// Decides `lower` is a subcontract of `upper`.
pub fn subcontract(lower: &Contract, upper: &Contract) -> bool {
    sub_prove(&SubEnv::new(), &SubJudgment::new(lower, upper)).is_some()
}

/// The `k`-th stratified approximant of the subcontract relation.
pub fn sub_k(lower: &Contract, upper: &Contract, k: usize) -> bool {
    let mut memo = HashMap::new();
    sub_k_memo(&lower.unfold_head(), &upper.unfold_head(), k, &mut memo)
}

fn sub_k_memo(l: &Contract, u: &Contract, k: usize, memo: &mut HashMap<(Contract, Contract, usize), bool>) -> bool {
    if k == 0 || l.is_success() {
        return true;
    }
    let key = (l.clone(), u.clone(), k);
    if let Some(v) = memo.get(&key) {
        return *v;
    }
    let mut rec = |x: &Contract, y: &Contract| sub_k_memo(&x.unfold_head(), &y.unfold_head(), k - 1, memo);
    let mut result = false;
    if let (Contract::Internal(lj), Some(ui)) = (l, output_view(u)) {
        result = lj.iter().any(|(a, x)| branch_of(ui, a).is_some_and(|y| rec(x, y)));
    }
    if !result {
        let same_polarity = match (l, u) {
            (Contract::Input(li), Contract::Input(uj)) => Some((li.as_slice(), uj.as_slice())),
            _ => output_view(l).zip(output_view(u)),
        };
        if let Some((li, uj)) = same_polarity {
            result = subset(li, uj) && li.iter().all(|(a, x)| rec(x, branch_of(uj, a).expect("subset")));
        }
    }
    if !result {
        if let (Contract::Internal(lj), Contract::Internal(ui)) = (l, u) {
            result = subset(ui, lj) && ui.iter().all(|(a, y)| rec(branch_of(lj, a).expect("subset"), y));
        }
    }
    memo.insert(key, result);
    result
}

/// Checks every node of a subcontract derivation against its rule.
pub fn check_sub_derivation(d: &SubDerivation) -> bool {
    let j = &d.judgment;
    let (l, u) = (j.lower.unfold_head(), j.upper.unfold_head());
    let premises_ok = |expected: Vec<SubJudgment>| {
        let inner = d.env.extended(j);
        d.premises.len() == expected.len()
            && d.premises
                .iter()
                .zip(&expected)
                .all(|(p, e)| p.env.same_set(&inner) && p.judgment.equal_regular(e) && check_sub_derivation(p))
    };
    match d.rule {
        SubRule::Ax => d.premises.is_empty() && l.is_success(),
        SubRule::Hyp => d.premises.is_empty() && d.env.contains(j),
        SubRule::OplusPlus => match (&l, &u, &d.branch) {
            (Contract::Internal(li), Contract::Affectible(uj), Some(a)) => match (branch_of(li, a), branch_of(uj, a)) {
                (Some(x), Some(y)) => premises_ok(vec![SubJudgment::new(x, y)]),
                _ => false,
            },
            _ => false,
        },
        SubRule::PlusPlusIn => match (&l, &u) {
            (Contract::Input(li), Contract::Input(uj)) if subset(li, uj) => {
                premises_ok(li.iter().map(|(a, x)| SubJudgment::new(x, branch_of(uj, a).expect("subset"))).collect())
            }
            _ => false,
        },
        SubRule::PlusPlusOut => match (output_view(&l), output_view(&u)) {
            (Some(li), Some(uj)) if subset(li, uj) && !(li.len() == 1 && uj.len() == 1) => {
                premises_ok(li.iter().map(|(a, x)| SubJudgment::new(x, branch_of(uj, a).expect("subset"))).collect())
            }
            _ => false,
        },
        SubRule::OplusOplus => match (&l, &u) {
            (Contract::Internal(li), Contract::Internal(uj)) if subset(uj, li) => {
                premises_ok(uj.iter().map(|(a, y)| SubJudgment::new(branch_of(li, a).expect("subset"), y)).collect())
            }
            _ => false,
        },
    }
}

// ---------------------------------------------------------------------------
// Functors
// ---------------------------------------------------------------------------

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SubError {
    #[error("invalid subcontract derivation")]
    InvalidDerivation,
    #[error("hypothesis {0} has no enclosing functor variable")]
    UnboundHypothesis(String),
}

#[derive(Clone, Debug)]
struct FunctorNode {
    rule: SubRule,
    /// Labels of the premises, in premise order.
    labels: Vec<Name>,
    premises: Vec<usize>,
    /// For `Hyp` nodes: the enclosing node whose functor variable is used.
    target: Option<usize>,
    /// The branch of a `(+).+` node.
    branch: Option<Name>,
}

/// The orchestrator transformer read off a subcontract derivation. Each
/// node is a case analysis on the head of the orchestrator it receives.
#[derive(Clone, Debug)]
pub struct Functor {
    nodes: Vec<FunctorNode>,
}

/// Turns a valid derivation with empty root environment into a functor.
pub fn compile_functor(d: &SubDerivation) -> Result<Functor, SubError> {
    if !d.env.is_empty() || !check_sub_derivation(d) {
        return Err(SubError::InvalidDerivation);
    }
    let mut nodes = Vec::new();
    let mut scope: Vec<(SubJudgment, usize)> = Vec::new();
    compile_node(d, &mut nodes, &mut scope)?;
    Ok(Functor { nodes })
}

fn compile_node(
    d: &SubDerivation,
    nodes: &mut Vec<FunctorNode>,
    scope: &mut Vec<(SubJudgment, usize)>,
) -> Result<usize, SubError> {
    let id = nodes.len();
    nodes.push(FunctorNode { rule: d.rule, labels: vec![], premises: vec![], target: None, branch: d.branch.clone() });
    match d.rule {
        SubRule::Ax => {}
        SubRule::Hyp => {
            let target = scope
                .iter()
                .rev()
                .find(|(j, _)| j.equal_regular(&d.judgment))
                .map(|(_, v)| *v)
                .ok_or_else(|| SubError::UnboundHypothesis(d.judgment.to_string()))?;
            nodes[id].target = Some(target);
        }
        _ => {
            let labels: Vec<Name> = match (d.rule, &d.judgment.lower, &d.judgment.upper) {
                (SubRule::OplusPlus, _, _) => d.branch.iter().cloned().collect(),
                (SubRule::OplusOplus, _, u) => u.labels(),
                (_, l, _) => l.labels(),
            };
            scope.push((d.judgment.clone(), id));
            let mut premises = Vec::new();
            for p in &d.premises {
                premises.push(compile_node(p, nodes, scope)?);
            }
            scope.pop();
            nodes[id].labels = labels;
            nodes[id].premises = premises;
        }
    }
    Ok(id)
}

type EvalKey = (usize, CanonicalKey<OrchTag>);

struct Eval<'a> {
    functor: &'a Functor,
    active: HashMap<EvalKey, (String, bool)>,
    done: HashMap<EvalKey, Orch>,
    fresh: usize,
}

/// Applies a functor to a closed orchestrator. Evaluation is memoized on
/// (node, orchestrator) pairs, so recursive functors on recursive
/// orchestrators yield a finite recursive result. Shapes the case analysis
/// does not expect give `1`.
pub fn apply_functor(functor: &Functor, f: &Orch) -> Orch {
    let mut ev = Eval { functor, active: HashMap::new(), done: HashMap::new(), fresh: 0 };
    ev.eval(0, f)
}

impl Eval<'_> {
    fn eval(&mut self, node: usize, f: &Orch) -> Orch {
        let n = &self.functor.nodes[node];
        if let Some(t) = n.target {
            return self.eval(t, f);
        }
        let key = (node, f.canonical_key());
        if let Some(g) = self.done.get(&key) {
            return g.clone();
        }
        if let Some((x, used)) = self.active.get_mut(&key) {
            *used = true;
            return Orch::var(x);
        }
        let x = format!("y{}", self.fresh);
        self.fresh += 1;
        self.active.insert(key.clone(), (x.clone(), false));
        let body = self.case(node, &f.unfold_head());
        let (_, used) = self.active.remove(&key).expect("inserted above");
        let out = if used { Orch::rec(&x, body) } else { body };
        if out.is_closed() {
            self.done.insert(key, out.clone());
        }
        out
    }

    fn premise_for(&self, node: usize, label: &str) -> Option<usize> {
        let n = &self.functor.nodes[node];
        n.labels.iter().position(|l| l == label).map(|i| n.premises[i])
    }

    fn case(&mut self, node: usize, f: &Orch) -> Orch {
        let n = self.functor.nodes[node].clone();
        let entries = |dir: Dir| -> Option<Vec<(OAct, Orch)>> {
            match f {
                Orch::Disj(es) if es.iter().all(|(a, _)| a.dir == dir) => Some(es.clone()),
                _ => None,
            }
        };
        let entry = |es: &[(OAct, Orch)], a: &str| es.iter().find(|(b, _)| b.name == a).map(|(_, k)| k.clone());
        match n.rule {
            SubRule::Ax | SubRule::Hyp => Orch::Idle,
            SubRule::OplusPlus => {
                let k = n.branch.clone().expect("branch recorded");
                match entries(Dir::ServerOut) {
                    Some(es) if n.labels.iter().all(|a| entry(&es, a).is_some()) => {
                        let fk = entry(&es, &k).expect("checked");
                        Orch::plus(OAct::server_out(&k), self.eval(n.premises[0], &fk))
                    }
                    _ => Orch::Idle,
                }
            }
            SubRule::PlusPlusIn => {
                if let Some(es) = entries(Dir::ServerIn) {
                    let kept: Vec<(OAct, Orch)> = es
                        .iter()
                        .filter_map(|(a, k)| self.premise_for(node, &a.name).map(|p| (a.clone(), p, k.clone())))
                        .collect::<Vec<_>>()
                        .into_iter()
                        .map(|(a, p, k)| (a, self.eval(p, &k)))
                        .collect();
                    return Orch::disj(kept).unwrap_or(Orch::Idle);
                }
                match f {
                    Orch::Plus(a, k) if a.dir == Dir::ServerIn => match self.premise_for(node, &a.name) {
                        Some(p) => Orch::plus(a.clone(), self.eval(p, k)),
                        None => Orch::Idle,
                    },
                    _ => Orch::Idle,
                }
            }
            SubRule::PlusPlusOut => {
                if let ([a], Orch::Disj(es)) = (n.labels.as_slice(), f) {
                    if let Some((act, k)) = es.iter().find(|(b, _)| b.name == *a && b.dir == Dir::ServerOut) {
                        return Orch::plus(act.clone(), self.eval(n.premises[0], k));
                    }
                }
                match f {
                    Orch::Plus(a, k) if a.dir == Dir::ServerOut => match self.premise_for(node, &a.name) {
                        Some(p) => Orch::plus(a.clone(), self.eval(p, k)),
                        None => Orch::Idle,
                    },
                    _ => Orch::Idle,
                }
            }
            SubRule::OplusOplus => match entries(Dir::ServerOut) {
                Some(es) if n.labels.iter().all(|a| entry(&es, a).is_some()) => {
                    let kept = n
                        .labels
                        .iter()
                        .zip(&n.premises)
                        .map(|(a, p)| (OAct::server_out(a), self.eval(*p, &entry(&es, a).expect("checked"))))
                        .collect();
                    Orch::disj(kept).expect("distinct labels")
                }
                _ => Orch::Idle,
            },
        }
    }
}
