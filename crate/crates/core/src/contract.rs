//! Affectible session contracts as equi-recursive terms.
//!
//! A contract is either the successful state `1`, an external choice of
//! inputs, an external choice of affectible outputs (at least two branches),
//! an internal choice of outputs, a recursion variable, or a recursive
//! binder. Branch lists are kept sorted by action name and are duplicate
//! free, so structural comparison is insensitive to the order in which
//! summands were written.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::regular::{self, RegularTerm};

/// An action name. Polarity is carried by the choice that contains it.
pub type Name = String;

/// One branch of a choice: an action name and its continuation.
pub type Branch = (Name, Contract);

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Contract {
    /// The successful contract `1`.
    Success,
    /// External choice of inputs `?a.C + ?b.D`.
    Input(Vec<Branch>),
    /// External choice of affectible outputs `!a.C + !b.D`; never a singleton.
    Affectible(Vec<Branch>),
    /// Internal choice of outputs `!a.C (+) !b.D`; a lone output lives here.
    Internal(Vec<Branch>),
    /// A recursion variable.
    Var(String),
    /// `rec x . C`.
    Rec(String, Box<Contract>),
}

/// The shape of a contract once recursion at the root has been unfolded.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ContractTag {
    Success,
    Input(Vec<Name>),
    Affectible(Vec<Name>),
    Internal(Vec<Name>),
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ContractError {
    #[error("a choice must have at least one branch")]
    EmptyChoice,
    #[error("duplicate label `{0}` in a choice")]
    DuplicateLabel(Name),
    #[error("an affectible output sum needs at least two branches")]
    SingletonAffectible,
    #[error("unguarded recursion on variable `{0}`")]
    UnguardedRecursion(String),
    #[error("free variable `{0}`")]
    FreeVariable(String),
    #[error("branches are not sorted by label")]
    Unsorted,
}

fn sorted_branches(mut branches: Vec<Branch>) -> Result<Vec<Branch>, ContractError> {
    if branches.is_empty() {
        return Err(ContractError::EmptyChoice);
    }
    branches.sort_by(|a, b| a.0.cmp(&b.0));
    for w in branches.windows(2) {
        if w[0].0 == w[1].0 {
            return Err(ContractError::DuplicateLabel(w[0].0.clone()));
        }
    }
    Ok(branches)
}

impl Contract {
    /// Builds an external choice of inputs.
    pub fn input(branches: Vec<Branch>) -> Result<Contract, ContractError> {
        Ok(Contract::Input(sorted_branches(branches)?))
    }

    /// Builds an internal choice of outputs.
    pub fn internal(branches: Vec<Branch>) -> Result<Contract, ContractError> {
        Ok(Contract::Internal(sorted_branches(branches)?))
    }

    /// Builds an affectible output sum. Fails on a single branch: a lone
    /// output is an internal choice, see [`Contract::output_sum`].
    pub fn affectible(branches: Vec<Branch>) -> Result<Contract, ContractError> {
        let branches = sorted_branches(branches)?;
        if branches.len() < 2 {
            return Err(ContractError::SingletonAffectible);
        }
        Ok(Contract::Affectible(branches))
    }

    /// Builds an external output sum, reading a single branch as an internal
    /// choice.
    pub fn output_sum(branches: Vec<Branch>) -> Result<Contract, ContractError> {
        if branches.len() == 1 {
            Contract::internal(branches)
        } else {
            Contract::affectible(branches)
        }
    }

    /// `?a.cont`
    pub fn recv(name: &str, cont: Contract) -> Contract {
        Contract::Input(vec![(name.to_string(), cont)])
    }

    /// `!a.cont`, an internal choice with one branch.
    pub fn send(name: &str, cont: Contract) -> Contract {
        Contract::Internal(vec![(name.to_string(), cont)])
    }

    pub fn rec(var: &str, body: Contract) -> Contract {
        Contract::Rec(var.to_string(), Box::new(body))
    }

    pub fn var(var: &str) -> Contract {
        Contract::Var(var.to_string())
    }

    /// Branches of a choice, or `None` for `1`, variables and binders.
    pub fn branches(&self) -> Option<&[Branch]> {
        match self {
            Contract::Input(b) | Contract::Affectible(b) | Contract::Internal(b) => Some(b),
            _ => None,
        }
    }

    /// Continuation of the branch labelled `name`, if any.
    pub fn branch(&self, name: &str) -> Option<&Contract> {
        self.branches()?
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, c)| c)
    }

    pub fn labels(&self) -> Vec<Name> {
        self.branches()
            .map(|bs| bs.iter().map(|(n, _)| n.clone()).collect())
            .unwrap_or_default()
    }

    pub fn is_success(&self) -> bool {
        matches!(self, Contract::Success)
    }

    pub fn has_rec(&self) -> bool {
        match self {
            Contract::Success => false,
            Contract::Var(_) | Contract::Rec(_, _) => true,
            Contract::Input(b) | Contract::Affectible(b) | Contract::Internal(b) => {
                b.iter().any(|(_, c)| c.has_rec())
            }
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match self {
            Contract::Success => {}
            Contract::Var(x) => {
                if !bound.contains(x) {
                    out.insert(x.clone());
                }
            }
            Contract::Rec(x, body) => {
                bound.push(x.clone());
                body.collect_free(bound, out);
                bound.pop();
            }
            Contract::Input(b) | Contract::Affectible(b) | Contract::Internal(b) => {
                for (_, c) in b {
                    c.collect_free(bound, out);
                }
            }
        }
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// Checks the invariants every well-formed contract satisfies: sorted
    /// duplicate-free non-empty branch lists, affectible sums with at least
    /// two branches, guarded recursion and no free variables.
    pub fn validate(&self) -> Result<(), ContractError> {
        self.validate_in(&mut Vec::new())
    }

    fn validate_in(&self, bound: &mut Vec<String>) -> Result<(), ContractError> {
        match self {
            Contract::Success => Ok(()),
            Contract::Var(x) => {
                if bound.contains(x) {
                    Ok(())
                } else {
                    Err(ContractError::FreeVariable(x.clone()))
                }
            }
            Contract::Rec(x, body) => {
                let mut head: &Contract = body;
                while let Contract::Rec(_, b) = head {
                    head = b;
                }
                if let Contract::Var(y) = head {
                    return Err(ContractError::UnguardedRecursion(y.clone()));
                }
                bound.push(x.clone());
                let r = body.validate_in(bound);
                bound.pop();
                r
            }
            Contract::Input(b) | Contract::Affectible(b) | Contract::Internal(b) => {
                if b.is_empty() {
                    return Err(ContractError::EmptyChoice);
                }
                for w in b.windows(2) {
                    if w[0].0 == w[1].0 {
                        return Err(ContractError::DuplicateLabel(w[0].0.clone()));
                    }
                    if w[0].0 > w[1].0 {
                        return Err(ContractError::Unsorted);
                    }
                }
                if matches!(self, Contract::Affectible(_)) && b.len() < 2 {
                    return Err(ContractError::SingletonAffectible);
                }
                for (_, c) in b {
                    c.validate_in(bound)?;
                }
                Ok(())
            }
        }
    }

    /// Replaces free occurrences of `var` with `with`. `with` must be closed,
    /// so no capture can happen.
    pub fn substitute(&self, var: &str, with: &Contract) -> Contract {
        match self {
            Contract::Success => Contract::Success,
            Contract::Var(x) if x == var => with.clone(),
            Contract::Var(_) => self.clone(),
            Contract::Rec(x, _) if x == var => self.clone(),
            Contract::Rec(x, body) => Contract::Rec(x.clone(), Box::new(body.substitute(var, with))),
            Contract::Input(b) => Contract::Input(subst_branches(b, var, with)),
            Contract::Affectible(b) => Contract::Affectible(subst_branches(b, var, with)),
            Contract::Internal(b) => Contract::Internal(subst_branches(b, var, with)),
        }
    }

    /// One unfolding step: `rec x . b` becomes `b[rec x . b / x]`; any other
    /// term is returned unchanged.
    pub fn unfold(&self) -> Contract {
        match self {
            Contract::Rec(x, body) => body.substitute(x, self),
            _ => self.clone(),
        }
    }

    /// Unfolds until the root is no longer a binder. Terminates on guarded
    /// terms.
    pub fn unfold_head(&self) -> Contract {
        let mut c = self.clone();
        while let Contract::Rec(_, _) = c {
            c = c.unfold();
        }
        c
    }

    /// Number of nested prefixes along the longest path of the syntax tree.
    pub fn depth(&self) -> usize {
        match self {
            Contract::Success | Contract::Var(_) => 0,
            Contract::Rec(_, b) => b.depth(),
            Contract::Input(b) | Contract::Affectible(b) | Contract::Internal(b) => {
                1 + b.iter().map(|(_, c)| c.depth()).max().unwrap_or(0)
            }
        }
    }

    /// Number of prefixes occurring in the syntax tree.
    pub fn size(&self) -> usize {
        match self {
            Contract::Success | Contract::Var(_) => 0,
            Contract::Rec(_, b) => b.size(),
            Contract::Input(b) | Contract::Affectible(b) | Contract::Internal(b) => {
                b.iter().map(|(_, c)| 1 + c.size()).sum()
            }
        }
    }

    /// All action names occurring in the term.
    pub fn alphabet(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.collect_names(&mut out);
        out
    }

    fn collect_names(&self, out: &mut BTreeSet<Name>) {
        match self {
            Contract::Success | Contract::Var(_) => {}
            Contract::Rec(_, b) => b.collect_names(out),
            Contract::Input(b) | Contract::Affectible(b) | Contract::Internal(b) => {
                for (n, c) in b {
                    out.insert(n.clone());
                    c.collect_names(out);
                }
            }
        }
    }

    /// The contracts reachable from `self` by following branch continuations,
    /// each unfolded at the root. Syntactically distinct terms are kept
    /// apart, so the set is finite but may contain terms denoting the same
    /// tree.
    pub fn subterm_closure(&self) -> Vec<Contract> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        let mut work = vec![self.unfold_head()];
        while let Some(c) = work.pop() {
            if !seen.insert(c.clone()) {
                continue;
            }
            if let Some(bs) = c.branches() {
                for (_, k) in bs {
                    work.push(k.unfold_head());
                }
            }
            out.push(c);
        }
        out
    }

    /// Tree equality of the denoted (possibly infinite) regular trees.
    pub fn equal_regular(&self, other: &Contract) -> bool {
        regular::bisimilar(self, other)
    }

    /// A hashable key identifying the denoted regular tree: two closed
    /// contracts have the same key exactly when they are `equal_regular`.
    pub fn canonical_key(&self) -> regular::CanonicalKey<ContractTag> {
        regular::canonical_key(self)
    }

    /// The quasi-dual: `1` to `1`, internal outputs to inputs, inputs to an
    /// internal choice of outputs, and affectible outputs to inputs. Binders
    /// are kept in place.
    pub fn quasi_dual(&self) -> Contract {
        match self {
            Contract::Success => Contract::Success,
            Contract::Var(_) => self.clone(),
            Contract::Rec(x, b) => Contract::Rec(x.clone(), Box::new(b.quasi_dual())),
            Contract::Internal(b) | Contract::Affectible(b) => Contract::Input(dual_branches(b)),
            Contract::Input(b) => Contract::Internal(dual_branches(b)),
        }
    }
}

fn subst_branches(b: &[Branch], var: &str, with: &Contract) -> Vec<Branch> {
    b.iter()
        .map(|(n, c)| (n.clone(), c.substitute(var, with)))
        .collect()
}

fn dual_branches(b: &[Branch]) -> Vec<Branch> {
    b.iter().map(|(n, c)| (n.clone(), c.quasi_dual())).collect()
}

impl RegularTerm for Contract {
    type Tag = ContractTag;

    fn observe(&self) -> (ContractTag, Vec<Contract>) {
        let head = self.unfold_head();
        let names = |b: &[Branch]| b.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>();
        let kids = |b: &[Branch]| b.iter().map(|(_, c)| c.clone()).collect::<Vec<_>>();
        match &head {
            Contract::Success => (ContractTag::Success, Vec::new()),
            Contract::Input(b) => (ContractTag::Input(names(b)), kids(b)),
            Contract::Affectible(b) => (ContractTag::Affectible(names(b)), kids(b)),
            Contract::Internal(b) => (ContractTag::Internal(names(b)), kids(b)),
            Contract::Var(x) => panic!("observe on an open contract: free variable `{x}`"),
            Contract::Rec(_, _) => unreachable!("unfold_head leaves no binder at the root"),
        }
    }
}

impl fmt::Display for Contract {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Contract::Success => write!(f, "1"),
            Contract::Var(x) => write!(f, "{x}"),
            Contract::Rec(x, b) => write!(f, "rec {x} . {b}"),
            Contract::Input(b) => write_sum(f, b, "?", " + "),
            Contract::Affectible(b) => write_sum(f, b, "!", " + "),
            Contract::Internal(b) => write_sum(f, b, "!", " (+) "),
        }
    }
}

fn write_sum(f: &mut fmt::Formatter<'_>, b: &[Branch], sigil: &str, sep: &str) -> fmt::Result {
    for (i, (n, c)) in b.iter().enumerate() {
        if i > 0 {
            write!(f, "{sep}")?;
        }
        write!(f, "{sigil}{n}")?;
        write_continuation(f, c)?;
    }
    Ok(())
}

fn write_continuation(f: &mut fmt::Formatter<'_>, c: &Contract) -> fmt::Result {
    match c {
        Contract::Success => Ok(()),
        Contract::Rec(_, _) => write!(f, ".({c})"),
        Contract::Input(b) | Contract::Affectible(b) | Contract::Internal(b) if b.len() > 1 => {
            write!(f, ".({c})")
        }
        _ => write!(f, ".{c}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stream_a() -> Contract {
        Contract::rec("x", Contract::recv("a", Contract::var("x")))
    }

    #[test]
    fn unfold_substitutes_the_binder() {
        let c = stream_a();
        assert_eq!(c.unfold(), Contract::recv("a", stream_a()));
        assert_eq!(Contract::Success.unfold(), Contract::Success);
    }

    #[test]
    fn unfold_with_two_branches() {
        let body = Contract::input(vec![
            ("a".into(), Contract::Success),
            ("b".into(), Contract::var("x")),
        ])
        .unwrap();
        let c = Contract::rec("x", body);
        let expected = Contract::input(vec![
            ("a".into(), Contract::Success),
            ("b".into(), c.clone()),
        ])
        .unwrap();
        assert_eq!(c.unfold(), expected);
    }

    #[test]
    fn output_sum_of_one_branch_is_internal() {
        let c = Contract::output_sum(vec![("a".into(), Contract::Success)]).unwrap();
        assert!(matches!(c, Contract::Internal(ref b) if b.len() == 1));
        assert_eq!(
            Contract::affectible(vec![("a".into(), Contract::Success)]),
            Err(ContractError::SingletonAffectible)
        );
    }

    #[test]
    fn duplicate_labels_are_rejected() {
        let r = Contract::input(vec![
            ("a".into(), Contract::Success),
            ("a".into(), Contract::Success),
        ]);
        assert_eq!(r, Err(ContractError::DuplicateLabel("a".into())));
    }

    #[test]
    fn closure_of_simple_terms() {
        assert_eq!(Contract::Success.subterm_closure(), vec![Contract::Success]);
        let c = Contract::input(vec![
            ("a".into(), Contract::Success),
            ("b".into(), Contract::Success),
        ])
        .unwrap();
        assert_eq!(c.subterm_closure().len(), 2);
    }

    #[test]
    fn equal_regular_basic_cases() {
        assert!(stream_a().equal_regular(&stream_a().unfold()));
        assert!(!Contract::recv("a", Contract::Success)
            .equal_regular(&Contract::recv("b", Contract::Success)));
        let twice = Contract::rec(
            "x",
            Contract::recv("a", Contract::recv("a", Contract::var("x"))),
        );
        let once = Contract::rec("y", Contract::recv("a", Contract::var("y")));
        assert!(twice.equal_regular(&once));
    }

    #[test]
    fn quasi_dual_clauses() {
        assert_eq!(Contract::Success.quasi_dual(), Contract::Success);
        let send_a = Contract::send("a", Contract::Success);
        assert_eq!(send_a.quasi_dual(), Contract::recv("a", Contract::Success));
        let aff = Contract::affectible(vec![
            ("a".into(), Contract::Success),
            ("b".into(), Contract::Success),
        ])
        .unwrap();
        let once = aff.quasi_dual();
        assert_eq!(
            once,
            Contract::input(vec![
                ("a".into(), Contract::Success),
                ("b".into(), Contract::Success)
            ])
            .unwrap()
        );
        assert_eq!(
            once.quasi_dual(),
            Contract::internal(vec![
                ("a".into(), Contract::Success),
                ("b".into(), Contract::Success)
            ])
            .unwrap()
        );
    }

    #[test]
    fn validate_flags_unguarded_and_free() {
        let unguarded = Contract::rec("x", Contract::var("x"));
        assert_eq!(
            unguarded.validate(),
            Err(ContractError::UnguardedRecursion("x".into()))
        );
        let free = Contract::recv("a", Contract::var("y"));
        assert_eq!(free.validate(), Err(ContractError::FreeVariable("y".into())));
    }

    #[test]
    fn printer_parenthesizes_multi_branch_continuations() {
        let pay = Contract::internal(vec![
            ("card".into(), Contract::Success),
            ("cash".into(), Contract::Success),
        ])
        .unwrap();
        let c = Contract::recv("price", pay);
        assert_eq!(c.to_string(), "?price.(!card (+) !cash)");
        assert_eq!(stream_a().to_string(), "rec x . ?a.x");
    }
}
