//! Executable operational semantics.
//!
//! * The turn-based LTS over configurations `client ||| server`, where the
//!   client is player A, the server player B and the mediator player C.
//! * Rollback semantics over contracts with a history stack.
//! * The orchestrated LTS `client <f> server`, both in the plain form and in
//!   the turn-based form.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::fmt;

use serde::Serialize;

use crate::contract::{Contract, ContractTag, Name};
use crate::orch::{Dir, OAct, Orch, OrchTag};
use crate::regular::CanonicalKey;

// ---------------------------------------------------------------------------
// Turn-based configurations
// ---------------------------------------------------------------------------

/// A contract inside a turn-based configuration: a plain contract, the
/// terminated state `0`, or an output `[!a]C` committed by an internal
/// choice and waiting to be consumed.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum BufferedContract {
    Plain(Contract),
    Zero,
    Buffered(Name, Contract),
}

impl BufferedContract {
    /// A plain contract with recursion at the root unfolded.
    pub fn plain(c: &Contract) -> BufferedContract {
        BufferedContract::Plain(c.unfold_head())
    }

    pub fn is_success(&self) -> bool {
        matches!(self, BufferedContract::Plain(Contract::Success))
    }

    pub fn key(&self) -> BufferedKey {
        match self {
            BufferedContract::Plain(c) => BufferedKey::Plain(c.canonical_key()),
            BufferedContract::Zero => BufferedKey::Zero,
            BufferedContract::Buffered(a, c) => BufferedKey::Buffered(a.clone(), c.canonical_key()),
        }
    }
}

impl fmt::Display for BufferedContract {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BufferedContract::Plain(c) => write!(f, "{c}"),
            BufferedContract::Zero => write!(f, "0"),
            BufferedContract::Buffered(a, Contract::Success) => write!(f, "[!{a}]1"),
            BufferedContract::Buffered(a, c) => write!(f, "[!{a}]({c})"),
        }
    }
}

/// Identity of a buffered contract up to tree equality.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BufferedKey {
    Plain(CanonicalKey<ContractTag>),
    Zero,
    Buffered(Name, CanonicalKey<ContractTag>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Player {
    A,
    B,
    C,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum TbAct {
    Input(Name),
    Output(Name),
    Tick,
}

/// A move of the turn-based LTS. C moves carry the name of the affectible
/// synchronization as an `Input` action, or `Tick` for the winning move.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct TBLabel {
    pub player: Player,
    pub act: TbAct,
}

impl TBLabel {
    pub fn new(player: Player, act: TbAct) -> TBLabel {
        TBLabel { player, act }
    }

    pub fn tick() -> TBLabel {
        TBLabel::new(Player::C, TbAct::Tick)
    }

    pub fn c(name: &str) -> TBLabel {
        TBLabel::new(Player::C, TbAct::Input(name.to_string()))
    }

    /// A or B moves: the unaffectible part of the interaction.
    pub fn is_unaffectible(&self) -> bool {
        self.player != Player::C
    }

    pub fn is_buffering_output(&self) -> bool {
        self.player != Player::C && matches!(self.act, TbAct::Output(_))
    }

    pub fn is_c_sync(&self) -> bool {
        self.player == Player::C && matches!(self.act, TbAct::Input(_))
    }
}

impl fmt::Display for TBLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = match self.player {
            Player::A => "A",
            Player::B => "B",
            Player::C => "C",
        };
        match &self.act {
            TbAct::Input(a) => write!(f, "{p}:{a}"),
            TbAct::Output(a) => write!(f, "{p}:!{a}"),
            TbAct::Tick => write!(f, "{p}:✓"),
        }
    }
}

/// A turn-based configuration `client ||| server`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct TBConfig {
    pub client: BufferedContract,
    pub server: BufferedContract,
}

impl TBConfig {
    pub fn new(client: &Contract, server: &Contract) -> TBConfig {
        TBConfig { client: BufferedContract::plain(client), server: BufferedContract::plain(server) }
    }

    pub fn key(&self) -> (BufferedKey, BufferedKey) {
        (self.client.key(), self.server.key())
    }
}

impl fmt::Display for TBConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}  |||  {}", self.client, self.server)
    }
}

fn common_labels(a: &[(Name, Contract)], b: &[(Name, Contract)]) -> Vec<(Name, Contract, Contract)> {
    a.iter()
        .filter_map(|(n, ka)| b.iter().find(|(m, _)| m == n).map(|(_, kb)| (n.clone(), ka.clone(), kb.clone())))
        .collect()
}

/// The moves of the client and server that do not involve player C.
fn unaffectible_moves(
    client: &BufferedContract,
    server: &BufferedContract,
) -> Vec<(TBLabel, BufferedContract, BufferedContract)> {
    use BufferedContract::*;
    let mut out = Vec::new();
    if let Plain(Contract::Internal(bs)) = client {
        for (a, k) in bs {
            out.push((
                TBLabel::new(Player::A, TbAct::Output(a.clone())),
                Buffered(a.clone(), k.clone()),
                server.clone(),
            ));
        }
    }
    if let (Plain(Contract::Input(bs)), Buffered(a, s2)) = (client, server) {
        if let Some((_, k)) = bs.iter().find(|(n, _)| n == a) {
            out.push((
                TBLabel::new(Player::A, TbAct::Input(a.clone())),
                BufferedContract::plain(k),
                BufferedContract::plain(s2),
            ));
        }
    }
    if let Plain(Contract::Internal(bs)) = server {
        for (a, k) in bs {
            out.push((
                TBLabel::new(Player::B, TbAct::Output(a.clone())),
                client.clone(),
                Buffered(a.clone(), k.clone()),
            ));
        }
    }
    if let (Buffered(a, c2), Plain(Contract::Input(bs))) = (client, server) {
        if let Some((_, k)) = bs.iter().find(|(n, _)| n == a) {
            out.push((
                TBLabel::new(Player::B, TbAct::Input(a.clone())),
                BufferedContract::plain(c2),
                BufferedContract::plain(k),
            ));
        }
    }
    out
}

/// Affectible synchronizations: an affectible output sum meets an input sum
/// of any size, on either side.
fn affectible_syncs(client: &BufferedContract, server: &BufferedContract) -> Vec<(Name, Contract, Contract)> {
    use BufferedContract::Plain;
    match (client, server) {
        (Plain(Contract::Affectible(cb)), Plain(Contract::Input(sb)))
        | (Plain(Contract::Input(cb)), Plain(Contract::Affectible(sb))) => common_labels(cb, sb),
        _ => Vec::new(),
    }
}

/// All transitions of the turn-based LTS from `cfg`, sorted by label.
pub fn tb_steps(cfg: &TBConfig) -> Vec<(TBLabel, TBConfig)> {
    let mut out: Vec<(TBLabel, TBConfig)> = unaffectible_moves(&cfg.client, &cfg.server)
        .into_iter()
        .map(|(l, c, s)| (l, TBConfig { client: c, server: s }))
        .collect();
    for (a, kc, ks) in affectible_syncs(&cfg.client, &cfg.server) {
        out.push((
            TBLabel::c(&a),
            TBConfig { client: BufferedContract::plain(&kc), server: BufferedContract::plain(&ks) },
        ));
    }
    if cfg.client.is_success() {
        out.push((TBLabel::tick(), TBConfig { client: BufferedContract::Zero, server: cfg.server.clone() }));
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

/// Configurations reachable from `start`, identified up to tree equality.
pub fn tb_reachable(start: &TBConfig) -> Vec<TBConfig> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let mut queue = VecDeque::from([start.clone()]);
    while let Some(cfg) = queue.pop_front() {
        if !seen.insert(cfg.key()) {
            continue;
        }
        for (_, next) in tb_steps(&cfg) {
            queue.push_back(next);
        }
        out.push(cfg);
    }
    out
}

// ---------------------------------------------------------------------------
// Rollback semantics
// ---------------------------------------------------------------------------

/// A history entry or current contract: `None` is the exhausted marker `∘`.
pub type HEntry = Option<Contract>;

/// A contract with history `<stack>current`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct HContract {
    pub stack: Vec<HEntry>,
    pub current: HEntry,
}

impl HContract {
    pub fn new(c: &Contract) -> HContract {
        HContract { stack: Vec::new(), current: Some(c.unfold_head()) }
    }

    pub fn is_success(&self) -> bool {
        matches!(self.current, Some(Contract::Success))
    }
}

fn write_entry(f: &mut fmt::Formatter<'_>, e: &HEntry) -> fmt::Result {
    match e {
        None => write!(f, "∘"),
        Some(c) => write!(f, "{c}"),
    }
}

impl fmt::Display for HContract {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<")?;
        if self.stack.is_empty() {
            write!(f, "[]")?;
        }
        for (i, e) in self.stack.iter().enumerate() {
            if i > 0 {
                write!(f, " : ")?;
            }
            write_entry(f, e)?;
        }
        write!(f, "> ")?;
        write_entry(f, &self.current)
    }
}

/// Labels of the contract-with-history LTS.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum RbkLabel {
    In(Name),
    Out(Name),
    Tau,
    Rb,
}

/// Transitions of a single contract with history.
pub fn rbk_contract_steps(hc: &HContract) -> Vec<(RbkLabel, HContract)> {
    let mut out = Vec::new();
    if let Some(c) = &hc.current {
        let c = c.unfold_head();
        match &c {
            Contract::Input(bs) | Contract::Affectible(bs) if bs.len() > 1 => {
                for (i, (a, k)) in bs.iter().enumerate() {
                    let rest: Vec<_> = bs.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, b)| b.clone()).collect();
                    let (label, remaining) = if matches!(c, Contract::Input(_)) {
                        (RbkLabel::In(a.clone()), Contract::Input(rest))
                    } else {
                        let remaining = Contract::output_sum(rest).expect("sub-list of a valid sum");
                        (RbkLabel::Out(a.clone()), remaining)
                    };
                    let mut stack = hc.stack.clone();
                    stack.push(Some(remaining));
                    out.push((label, HContract { stack, current: Some(k.unfold_head()) }));
                }
            }
            Contract::Input(bs) | Contract::Internal(bs) if bs.len() == 1 => {
                let (a, k) = &bs[0];
                let label = if matches!(c, Contract::Input(_)) {
                    RbkLabel::In(a.clone())
                } else {
                    RbkLabel::Out(a.clone())
                };
                let mut stack = hc.stack.clone();
                stack.push(None);
                out.push((label, HContract { stack, current: Some(k.unfold_head()) }));
            }
            Contract::Internal(bs) => {
                for b in bs {
                    out.push((
                        RbkLabel::Tau,
                        HContract { stack: hc.stack.clone(), current: Some(Contract::Internal(vec![b.clone()])) },
                    ));
                }
            }
            _ => {}
        }
    }
    if let Some((top, rest)) = hc.stack.split_last() {
        out.push((RbkLabel::Rb, HContract { stack: rest.to_vec(), current: top.clone() }));
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct RbkSystem {
    pub client: HContract,
    pub server: HContract,
}

impl RbkSystem {
    pub fn new(client: &Contract, server: &Contract) -> RbkSystem {
        RbkSystem { client: HContract::new(client), server: HContract::new(server) }
    }
}

impl fmt::Display for RbkSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}  ||  {}", self.client, self.server)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Side {
    Client,
    Server,
}

/// Which rule of the client/server system produced a step. Communications
/// record the action name and whether the client was the sender.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum RbkRule {
    Comm { name: Name, client_sends: bool },
    Tau(Side),
    Rbk,
}

impl fmt::Display for RbkRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RbkRule::Comm { name, client_sends: true } => write!(f, "comm  !{name}"),
            RbkRule::Comm { name, client_sends: false } => write!(f, "comm  ?{name}"),
            RbkRule::Tau(Side::Client) => write!(f, "tau   client"),
            RbkRule::Tau(Side::Server) => write!(f, "tau   server"),
            RbkRule::Rbk => write!(f, "rbk"),
        }
    }
}

/// Transitions of a client/server system with histories. Rollback is only
/// available when no communication or internal step is, the client is not
/// `1`, and both stacks can be popped.
pub fn rbk_system_steps(sys: &RbkSystem) -> Vec<(RbkRule, RbkSystem)> {
    let cm = rbk_contract_steps(&sys.client);
    let sm = rbk_contract_steps(&sys.server);
    let mut out = Vec::new();
    for (lc, c2) in &cm {
        for (ls, s2) in &sm {
            let rule = match (lc, ls) {
                (RbkLabel::In(a), RbkLabel::Out(b)) if a == b => RbkRule::Comm { name: a.clone(), client_sends: false },
                (RbkLabel::Out(a), RbkLabel::In(b)) if a == b => RbkRule::Comm { name: a.clone(), client_sends: true },
                _ => continue,
            };
            out.push((rule, RbkSystem { client: c2.clone(), server: s2.clone() }));
        }
    }
    for (lc, c2) in &cm {
        if *lc == RbkLabel::Tau {
            out.push((RbkRule::Tau(Side::Client), RbkSystem { client: c2.clone(), server: sys.server.clone() }));
        }
    }
    for (ls, s2) in &sm {
        if *ls == RbkLabel::Tau {
            out.push((RbkRule::Tau(Side::Server), RbkSystem { client: sys.client.clone(), server: s2.clone() }));
        }
    }
    if !out.is_empty() {
        return out;
    }
    let rb_c = cm.iter().find(|(l, _)| *l == RbkLabel::Rb);
    let rb_s = sm.iter().find(|(l, _)| *l == RbkLabel::Rb);
    if let (false, Some((_, c2)), Some((_, s2))) = (sys.client.is_success(), rb_c, rb_s) {
        out.push((RbkRule::Rbk, RbkSystem { client: c2.clone(), server: s2.clone() }));
    }
    out
}

// ---------------------------------------------------------------------------
// Orchestrated systems
// ---------------------------------------------------------------------------

/// Labels of the contract LTS used by orchestrated systems.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CMove {
    /// Input of `a` from an input choice of any size.
    In(Name),
    /// Output of `a` from a lone internal output.
    Out(Name),
    /// Output of `a` selected in an affectible sum.
    OutPlus(Name),
    /// Resolution of an internal choice with several branches.
    Silent,
}

pub fn contract_moves(c: &Contract) -> Vec<(CMove, Contract)> {
    match c.unfold_head() {
        Contract::Input(bs) => bs.into_iter().map(|(a, k)| (CMove::In(a), k)).collect(),
        Contract::Affectible(bs) => bs.into_iter().map(|(a, k)| (CMove::OutPlus(a), k)).collect(),
        Contract::Internal(bs) if bs.len() == 1 => {
            let (a, k) = bs.into_iter().next().expect("one branch");
            vec![(CMove::Out(a), k)]
        }
        Contract::Internal(bs) => bs.into_iter().map(|b| (CMove::Silent, Contract::Internal(vec![b]))).collect(),
        _ => Vec::new(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct OrchSystem {
    pub client: Contract,
    pub orch: Orch,
    pub server: Contract,
}

impl OrchSystem {
    pub fn new(client: &Contract, orch: &Orch, server: &Contract) -> OrchSystem {
        OrchSystem { client: client.unfold_head(), orch: orch.clone(), server: server.unfold_head() }
    }

    pub fn key(&self) -> (CanonicalKey<ContractTag>, CanonicalKey<OrchTag>, CanonicalKey<ContractTag>) {
        (self.client.canonical_key(), self.orch.canonical_key(), self.server.canonical_key())
    }
}

impl fmt::Display for OrchSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}  <{}>  {}", self.client, self.orch, self.server)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum OrchLabel {
    /// An internal choice resolved on one side.
    Silent(Side),
    /// A plain synchronization permitted by a disjunct.
    Tau(OAct),
    /// An affectible synchronization selected by a `+` action.
    Plus(OAct),
}

impl fmt::Display for OrchLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OrchLabel::Silent(Side::Client) => write!(f, "silent client"),
            OrchLabel::Silent(Side::Server) => write!(f, "silent server"),
            OrchLabel::Tau(a) => write!(f, "tau {a}"),
            OrchLabel::Plus(a) => write!(f, "plus {a}+"),
        }
    }
}

/// Transitions of an orchestrated system. A plain synchronization consumes
/// the disjunct that permits it, so the orchestrator moves to that
/// disjunct's continuation.
pub fn orch_steps(sys: &OrchSystem) -> Vec<(OrchLabel, OrchSystem)> {
    let cm = contract_moves(&sys.client);
    let sm = contract_moves(&sys.server);
    let f = sys.orch.unfold_head();
    let mut out = Vec::new();
    for (lc, c2) in &cm {
        for (ls, s2) in &sm {
            let (action, plus) = match (lc, ls) {
                (CMove::In(a), CMove::OutPlus(b)) if a == b => (OAct::server_out(a), true),
                (CMove::OutPlus(a), CMove::In(b)) if a == b => (OAct::server_in(a), true),
                (CMove::In(a), CMove::Out(b)) if a == b => (OAct::server_out(a), false),
                (CMove::Out(a), CMove::In(b)) if a == b => (OAct::server_in(a), false),
                _ => continue,
            };
            let next = match (&f, plus) {
                (Orch::Plus(act, k), true) if *act == action => Some((**k).clone()),
                (Orch::Disj(es), false) => es.iter().find(|(act, _)| *act == action).map(|(_, k)| k.clone()),
                _ => None,
            };
            if let Some(k) = next {
                let label = if plus { OrchLabel::Plus(action) } else { OrchLabel::Tau(action) };
                out.push((label, OrchSystem::new(c2, &k, s2)));
            }
        }
    }
    for (lc, c2) in &cm {
        if *lc == CMove::Silent {
            out.push((OrchLabel::Silent(Side::Client), OrchSystem::new(c2, &sys.orch, &sys.server)));
        }
    }
    for (ls, s2) in &sm {
        if *ls == CMove::Silent {
            out.push((OrchLabel::Silent(Side::Server), OrchSystem::new(&sys.client, &sys.orch, s2)));
        }
    }
    out
}

/// States reachable by silent steps only that have no further silent step.
pub fn silent_normal_forms(sys: &OrchSystem) -> Vec<OrchSystem> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let mut queue = VecDeque::from([sys.clone()]);
    while let Some(s) = queue.pop_front() {
        if !seen.insert(s.clone()) {
            continue;
        }
        let silent: Vec<_> = orch_steps(&s)
            .into_iter()
            .filter(|(l, _)| matches!(l, OrchLabel::Silent(_)))
            .collect();
        if silent.is_empty() {
            out.push(s);
        } else {
            queue.extend(silent.into_iter().map(|(_, n)| n));
        }
    }
    out
}

/// The big-step relation: silent steps followed by one plain or affectible
/// synchronization.
pub fn orch_big_steps(sys: &OrchSystem) -> Vec<OrchSystem> {
    let mut seen = HashSet::new();
    let mut out = BTreeSet::new();
    let mut queue = VecDeque::from([sys.clone()]);
    while let Some(s) = queue.pop_front() {
        if !seen.insert(s.clone()) {
            continue;
        }
        for (l, n) in orch_steps(&s) {
            match l {
                OrchLabel::Silent(_) => queue.push_back(n),
                _ => {
                    out.insert(n);
                }
            }
        }
    }
    out.into_iter().collect()
}

/// A turn-based configuration under the control of an orchestrator.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct TBOrchConfig {
    pub client: BufferedContract,
    pub orch: Orch,
    pub server: BufferedContract,
}

impl TBOrchConfig {
    pub fn new(client: &Contract, orch: &Orch, server: &Contract) -> TBOrchConfig {
        TBOrchConfig {
            client: BufferedContract::plain(client),
            orch: orch.unfold_head(),
            server: BufferedContract::plain(server),
        }
    }

    pub fn key(&self) -> (BufferedKey, CanonicalKey<OrchTag>, BufferedKey) {
        (self.client.key(), self.orch.canonical_key(), self.server.key())
    }

    /// The configuration with the orchestrator erased.
    pub fn erase(&self) -> TBConfig {
        TBConfig { client: self.client.clone(), server: self.server.clone() }
    }
}

impl fmt::Display for TBOrchConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}  <{}>  {}", self.client, self.orch, self.server)
    }
}

/// Transitions of the turn-based orchestrated LTS, sorted by label.
/// Buffering outputs are free; consuming a buffered output needs a matching
/// disjunct, and an affectible synchronization needs a matching `+` prefix.
pub fn tb_orch_steps(cfg: &TBOrchConfig) -> Vec<(TBLabel, TBOrchConfig)> {
    let f = cfg.orch.unfold_head();
    let mut out = Vec::new();
    for (label, c2, s2) in unaffectible_moves(&cfg.client, &cfg.server) {
        let next_orch = match (&label.player, &label.act) {
            (_, TbAct::Output(_)) => Some(f.clone()),
            (Player::A, TbAct::Input(a)) => disjunct(&f, &OAct::server_out(a)),
            (Player::B, TbAct::Input(a)) => disjunct(&f, &OAct::server_in(a)),
            _ => None,
        };
        if let Some(g) = next_orch {
            out.push((label, TBOrchConfig { client: c2, orch: g.unfold_head(), server: s2 }));
        }
    }
    if let Orch::Plus(act, k) = &f {
        let client_outputs = matches!(cfg.client, BufferedContract::Plain(Contract::Affectible(_)));
        let wanted = if client_outputs { Dir::ServerIn } else { Dir::ServerOut };
        for (a, kc, ks) in affectible_syncs(&cfg.client, &cfg.server) {
            if act.name == a && act.dir == wanted {
                out.push((
                    TBLabel::c(&a),
                    TBOrchConfig {
                        client: BufferedContract::plain(&kc),
                        orch: k.unfold_head(),
                        server: BufferedContract::plain(&ks),
                    },
                ));
            }
        }
    }
    if cfg.client.is_success() {
        out.push((
            TBLabel::tick(),
            TBOrchConfig { client: BufferedContract::Zero, orch: f.clone(), server: cfg.server.clone() },
        ));
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

fn disjunct(f: &Orch, action: &OAct) -> Option<Orch> {
    match f {
        Orch::Disj(es) => es.iter().find(|(a, _)| a == action).map(|(_, k)| k.clone()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_contract, parse_orch};

    fn c(s: &str) -> Contract {
        parse_contract(s).unwrap()
    }

    #[test]
    fn success_client_ticks() {
        let cfg = TBConfig::new(&Contract::Success, &c("?a"));
        let steps = tb_steps(&cfg);
        assert_eq!(steps.len(), 1);
        assert_eq!(steps[0].0, TBLabel::tick());
        assert_eq!(steps[0].1.client, BufferedContract::Zero);
    }

    #[test]
    fn internal_choice_buffers_each_branch() {
        let cfg = TBConfig::new(&c("!a.?x (+) !b.?y"), &c("?a"));
        let labels: Vec<String> = tb_steps(&cfg).iter().map(|(l, _)| l.to_string()).collect();
        assert_eq!(labels, vec!["A:!a", "A:!b"]);
        assert_eq!(tb_steps(&cfg)[0].1.client, BufferedContract::Buffered("a".into(), c("?x")));
    }

    #[test]
    fn rb_needs_a_non_empty_stack() {
        let hc = HContract::new(&c("?a"));
        assert!(rbk_contract_steps(&hc).iter().all(|(l, _)| *l != RbkLabel::Rb));
    }

    #[test]
    fn external_choice_pushes_remaining_branches() {
        let hc = HContract::new(&c("?a.?c + ?b"));
        let steps = rbk_contract_steps(&hc);
        assert_eq!(steps[0].0, RbkLabel::In("a".into()));
        assert_eq!(steps[0].1.stack, vec![Some(c("?b"))]);
        assert_eq!(steps[0].1.current, Some(c("?c")));
    }

    #[test]
    fn exhausted_marker_blocks_communication() {
        let sys = RbkSystem {
            client: HContract { stack: vec![Some(c("?z"))], current: Some(c("?b")) },
            server: HContract { stack: vec![Some(c("!z"))], current: None },
        };
        let steps = rbk_system_steps(&sys);
        assert_eq!(steps.len(), 1);
        assert_eq!(steps[0].0, RbkRule::Rbk);
    }

    #[test]
    fn idle_orchestrator_permits_nothing() {
        let sys = OrchSystem::new(&c("?a + ?b"), &Orch::Idle, &c("!a + !b"));
        assert!(orch_steps(&sys).is_empty());
    }

    #[test]
    fn tb_orch_buffer_consumption_follows_disjunct() {
        let f = parse_orch("<!a,a>.<b,!b>").unwrap();
        let cfg = TBOrchConfig {
            client: BufferedContract::plain(&c("?a.!b + ?c")),
            orch: f,
            server: BufferedContract::Buffered("a".into(), c("?b")),
        };
        let steps = tb_orch_steps(&cfg);
        assert_eq!(steps.len(), 1);
        assert_eq!(steps[0].0.to_string(), "A:a");
        assert_eq!(steps[0].1.orch, parse_orch("<b,!b>").unwrap());
    }
}
