//! Orchestrator terms.
//!
//! An orchestration action pairs the server's action with the client's
//! complementary one: `<a,!a>` lets the server receive `a` from the client,
//! `<!a,a>` lets the server send `a` to the client. A plain action permits a
//! synchronization the two parties would reach anyway; an affectible action
//! `<a,!a>+` selects one branch of an affectible choice.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::contract::Name;
use crate::regular::{self, RegularTerm};

/// Direction of the communication an orchestration action permits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Dir {
    /// `<a,!a>`: the server inputs `a`, the client outputs it.
    ServerIn,
    /// `<!a,a>`: the server outputs `a`, the client inputs it.
    ServerOut,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OAct {
    pub name: Name,
    pub dir: Dir,
}

impl OAct {
    pub fn server_in(name: &str) -> OAct {
        OAct { name: name.to_string(), dir: Dir::ServerIn }
    }

    pub fn server_out(name: &str) -> OAct {
        OAct { name: name.to_string(), dir: Dir::ServerOut }
    }
}

impl fmt::Display for OAct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.dir {
            Dir::ServerIn => write!(f, "<{0},!{0}>", self.name),
            Dir::ServerOut => write!(f, "<!{0},{0}>", self.name),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Orch {
    /// The idle orchestrator `1`.
    Idle,
    /// `<a,!a>+.f`: an affectible action followed by `f`.
    Plus(OAct, Box<Orch>),
    /// `<a,!a>.f \/ <!b,b>.g`: a non-empty disjunction of plain actions.
    Disj(Vec<(OAct, Orch)>),
    Var(String),
    Rec(String, Box<Orch>),
}

/// Root shape of an orchestrator once binders are unfolded.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OrchTag {
    Idle,
    Plus(OAct),
    Disj(Vec<OAct>),
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum OrchError {
    #[error("a disjunction must have at least one action")]
    EmptyDisjunction,
    #[error("duplicate action {0} in a disjunction")]
    DuplicateAction(OAct),
    #[error("unguarded recursion on variable `{0}`")]
    UnguardedRecursion(String),
    #[error("free variable `{0}`")]
    FreeVariable(String),
    #[error("disjunction actions are not sorted")]
    Unsorted,
}

impl Orch {
    /// A disjunction of plain actions, sorted and checked for duplicates.
    pub fn disj(mut entries: Vec<(OAct, Orch)>) -> Result<Orch, OrchError> {
        if entries.is_empty() {
            return Err(OrchError::EmptyDisjunction);
        }
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(OrchError::DuplicateAction(w[0].0.clone()));
            }
        }
        Ok(Orch::Disj(entries))
    }

    /// A single plain action `<..>.cont`.
    pub fn act(action: OAct, cont: Orch) -> Orch {
        Orch::Disj(vec![(action, cont)])
    }

    pub fn plus(action: OAct, cont: Orch) -> Orch {
        Orch::Plus(action, Box::new(cont))
    }

    pub fn rec(var: &str, body: Orch) -> Orch {
        Orch::Rec(var.to_string(), Box::new(body))
    }

    pub fn var(var: &str) -> Orch {
        Orch::Var(var.to_string())
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match self {
            Orch::Idle => {}
            Orch::Var(x) => {
                if !bound.contains(x) {
                    out.insert(x.clone());
                }
            }
            Orch::Rec(x, b) => {
                bound.push(x.clone());
                b.collect_free(bound, out);
                bound.pop();
            }
            Orch::Plus(_, k) => k.collect_free(bound, out),
            Orch::Disj(es) => {
                for (_, k) in es {
                    k.collect_free(bound, out);
                }
            }
        }
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    fn occurs_free(&self, var: &str) -> bool {
        match self {
            Orch::Idle => false,
            Orch::Var(x) => x == var,
            Orch::Rec(x, b) => x != var && b.occurs_free(var),
            Orch::Plus(_, k) => k.occurs_free(var),
            Orch::Disj(es) => es.iter().any(|(_, k)| k.occurs_free(var)),
        }
    }

    /// Checks sortedness and distinctness of disjunctions, guardedness of
    /// binders and closedness.
    pub fn validate(&self) -> Result<(), OrchError> {
        self.validate_in(&mut Vec::new())
    }

    fn validate_in(&self, bound: &mut Vec<String>) -> Result<(), OrchError> {
        match self {
            Orch::Idle => Ok(()),
            Orch::Var(x) => {
                if bound.contains(x) {
                    Ok(())
                } else {
                    Err(OrchError::FreeVariable(x.clone()))
                }
            }
            Orch::Rec(x, b) => {
                let mut head: &Orch = b;
                while let Orch::Rec(_, inner) = head {
                    head = inner;
                }
                if let Orch::Var(y) = head {
                    return Err(OrchError::UnguardedRecursion(y.clone()));
                }
                bound.push(x.clone());
                let r = b.validate_in(bound);
                bound.pop();
                r
            }
            Orch::Plus(_, k) => k.validate_in(bound),
            Orch::Disj(es) => {
                if es.is_empty() {
                    return Err(OrchError::EmptyDisjunction);
                }
                for w in es.windows(2) {
                    if w[0].0 == w[1].0 {
                        return Err(OrchError::DuplicateAction(w[0].0.clone()));
                    }
                    if w[0].0 > w[1].0 {
                        return Err(OrchError::Unsorted);
                    }
                }
                for (_, k) in es {
                    k.validate_in(bound)?;
                }
                Ok(())
            }
        }
    }

    pub fn substitute(&self, var: &str, with: &Orch) -> Orch {
        match self {
            Orch::Idle => Orch::Idle,
            Orch::Var(x) if x == var => with.clone(),
            Orch::Var(_) => self.clone(),
            Orch::Rec(x, _) if x == var => self.clone(),
            Orch::Rec(x, b) => Orch::Rec(x.clone(), Box::new(b.substitute(var, with))),
            Orch::Plus(a, k) => Orch::Plus(a.clone(), Box::new(k.substitute(var, with))),
            Orch::Disj(es) => Orch::Disj(
                es.iter()
                    .map(|(a, k)| (a.clone(), k.substitute(var, with)))
                    .collect(),
            ),
        }
    }

    pub fn unfold(&self) -> Orch {
        match self {
            Orch::Rec(x, b) => b.substitute(x, self),
            _ => self.clone(),
        }
    }

    pub fn unfold_head(&self) -> Orch {
        let mut f = self.clone();
        while let Orch::Rec(_, _) = f {
            f = f.unfold();
        }
        f
    }

    pub fn equal_regular(&self, other: &Orch) -> bool {
        regular::bisimilar(self, other)
    }

    pub fn canonical_key(&self) -> regular::CanonicalKey<OrchTag> {
        regular::canonical_key(self)
    }

    /// Skips binders whose variable does not occur in their body.
    fn strip_vacuous(&self) -> &Orch {
        let mut f = self;
        while let Orch::Rec(x, b) = f {
            if b.occurs_free(x) {
                break;
            }
            f = b;
        }
        f
    }

    /// Drops binders whose variable does not occur in their body.
    pub fn without_vacuous_binders(&self) -> Orch {
        match self {
            Orch::Idle | Orch::Var(_) => self.clone(),
            Orch::Rec(x, b) => {
                if b.occurs_free(x) {
                    Orch::Rec(x.clone(), Box::new(b.without_vacuous_binders()))
                } else {
                    b.without_vacuous_binders()
                }
            }
            Orch::Plus(a, k) => Orch::Plus(a.clone(), Box::new(k.without_vacuous_binders())),
            Orch::Disj(es) => Orch::Disj(
                es.iter()
                    .map(|(a, k)| (a.clone(), k.without_vacuous_binders()))
                    .collect(),
            ),
        }
    }
}

impl RegularTerm for Orch {
    type Tag = OrchTag;

    fn observe(&self) -> (OrchTag, Vec<Orch>) {
        match self.unfold_head() {
            Orch::Idle => (OrchTag::Idle, Vec::new()),
            Orch::Plus(a, k) => (OrchTag::Plus(a), vec![*k]),
            Orch::Disj(es) => {
                let (acts, kids) = es.into_iter().unzip();
                (OrchTag::Disj(acts), kids)
            }
            Orch::Var(x) => panic!("observe on an open orchestrator: free variable `{x}`"),
            Orch::Rec(_, _) => unreachable!("unfold_head leaves no binder at the root"),
        }
    }
}

impl fmt::Display for Orch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.strip_vacuous() {
            Orch::Idle => write!(f, "1"),
            Orch::Var(x) => write!(f, "{x}"),
            Orch::Rec(x, b) => write!(f, "rec {x} . {b}"),
            Orch::Plus(a, k) => {
                write!(f, "{a}+")?;
                write_continuation(f, k)
            }
            Orch::Disj(es) => {
                for (i, (a, k)) in es.iter().enumerate() {
                    if i > 0 {
                        write!(f, " \\/ ")?;
                    }
                    write!(f, "{a}")?;
                    write_continuation(f, k)?;
                }
                Ok(())
            }
        }
    }
}

fn write_continuation(f: &mut fmt::Formatter<'_>, k: &Orch) -> fmt::Result {
    match k.strip_vacuous() {
        Orch::Idle => Ok(()),
        Orch::Rec(_, _) => write!(f, ".({k})"),
        Orch::Disj(es) if es.len() > 1 => write!(f, ".({k})"),
        _ => write!(f, ".{k}"),
    }
}
