//! Games over the turn-based LTS: plays, configuration trees, univocal
//! strategies for the mediator, and the bridges between strategies and
//! orchestrators.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::contract::{Contract, Name};
use crate::orch::{OAct, Orch};
use crate::semantics::{
    tb_orch_steps, tb_reachable, tb_steps, BufferedContract, BufferedKey, Player, TBConfig, TBLabel,
    TBOrchConfig, TbAct,
};

/// An action paired with its timestamp.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct PlayEvent {
    pub time: usize,
    pub label: TBLabel,
}

impl fmt::Display for PlayEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.time, self.label)
    }
}

pub type Play = Vec<PlayEvent>;

/// Timestamps labels with 1, 2, 3, ...
pub fn play_from_labels(labels: &[TBLabel]) -> Play {
    labels.iter().enumerate().map(|(i, l)| PlayEvent { time: i + 1, label: l.clone() }).collect()
}

fn timestamps_ok(play: &[PlayEvent]) -> bool {
    play.iter().enumerate().all(|(i, e)| e.time == i + 1)
}

/// Replays `play` on the turn-based LTS, returning the reached
/// configuration when every event is enabled in turn.
pub fn replay(client: &Contract, server: &Contract, play: &[PlayEvent]) -> Option<TBConfig> {
    if !timestamps_ok(play) {
        return None;
    }
    let mut cfg = TBConfig::new(client, server);
    for e in play {
        cfg = tb_steps(&cfg).into_iter().find(|(l, _)| *l == e.label)?.1;
    }
    Some(cfg)
}

/// Whether `player` wins a play: infinite plays are won by everyone, a
/// finite play only by the player whose success action closes it.
pub fn winning(play: &[PlayEvent], infinite: bool, player: Player) -> bool {
    infinite || play.last().is_some_and(|e| e.label == TBLabel::new(player, TbAct::Tick))
}

// ---------------------------------------------------------------------------
// Configuration trees
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum NodeKind {
    /// A configuration with successors.
    Inner,
    /// The client has terminated.
    Done,
    /// Stuck with an unsuccessful client.
    Fail,
}

#[derive(Clone, Debug, Serialize)]
pub struct Edge {
    pub label: TBLabel,
    pub target: usize,
    /// The target is an ancestor: the tree continues as an infinite regular
    /// tree from there.
    pub back: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct TreeNode {
    pub config: TBConfig,
    /// The residual orchestrator, for trees of orchestrated configurations.
    pub orch: Option<Orch>,
    pub kind: NodeKind,
    pub children: Vec<Edge>,
}

/// A finite presentation of a regular tree of configurations. Node 0 is
/// the root; every node except the root has exactly one non-back parent edge.
#[derive(Clone, Debug, Serialize)]
pub struct ConfigTree {
    pub nodes: Vec<TreeNode>,
}

impl ConfigTree {
    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    /// Follows the labels of `play` from the root.
    pub fn walk(&self, play: &[PlayEvent]) -> Option<usize> {
        if !timestamps_ok(play) {
            return None;
        }
        play.iter().try_fold(0, |v, e| self.nodes[v].children.iter().find(|c| c.label == e.label).map(|c| c.target))
    }

    /// Root-to-leaf label sequences, stopping at back edges.
    pub fn paths(&self) -> Vec<Vec<TBLabel>> {
        fn go(t: &ConfigTree, v: usize, prefix: &mut Vec<TBLabel>, out: &mut Vec<Vec<TBLabel>>) {
            if t.nodes[v].children.is_empty() {
                out.push(prefix.clone());
            }
            for e in &t.nodes[v].children {
                prefix.push(e.label.clone());
                if e.back {
                    out.push(prefix.clone());
                } else {
                    go(t, e.target, prefix, out);
                }
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        go(self, 0, &mut Vec::new(), &mut out);
        out
    }

    pub fn to_json(&self) -> Value {
        let nodes: Vec<Value> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| {
                json!({
                    "id": i,
                    "config": n.config.to_string(),
                    "orchestrator": n.orch.as_ref().map(|f| f.to_string()),
                    "kind": format!("{:?}", n.kind),
                    "edges": n.children.iter().map(|e| json!({
                        "label": e.label.to_string(),
                        "target": e.target,
                        "back": e.back,
                    })).collect::<Vec<_>>(),
                })
            })
            .collect();
        json!({ "nodes": nodes })
    }
}

impl fmt::Display for ConfigTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn go(t: &ConfigTree, v: usize, depth: usize, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            let n = &t.nodes[v];
            let mark = match n.kind {
                NodeKind::Done => "  [done]",
                NodeKind::Fail => "  [x]",
                NodeKind::Inner => "",
            };
            writeln!(f, "{:w$}#{v} {}{mark}", "", n.config, w = depth * 2)?;
            for e in &n.children {
                if e.back {
                    writeln!(f, "{:w$}({}, {}) -> back to #{}", "", depth + 1, e.label, e.target, w = depth * 2 + 2)?;
                } else {
                    writeln!(f, "{:w$}({}, {})", "", depth + 1, e.label, w = depth * 2 + 2)?;
                    go(t, e.target, depth + 1, f)?;
                }
            }
            Ok(())
        }
        go(self, 0, 0, f)
    }
}

/// Selects one C move among the enabled ones, returning its index.
pub type Chooser<'a> = dyn FnMut(&TBConfig, &[TBLabel]) -> usize + 'a;

/// A chooser that prefers the first label of `preferences` which is
/// enabled, and otherwise takes the first enabled C move.
pub fn label_chooser(preferences: &[&str]) -> impl FnMut(&TBConfig, &[TBLabel]) -> usize {
    let prefs: Vec<Name> = preferences.iter().map(|s| s.to_string()).collect();
    move |_, labels| {
        prefs
            .iter()
            .find_map(|p| labels.iter().position(|l| l.act == TbAct::Input(p.clone())))
            .unwrap_or(0)
    }
}

fn is_plain(b: &BufferedContract) -> bool {
    matches!(b, BufferedContract::Plain(_))
}

/// The successors kept by a configuration tree: only the success move for a
/// successful client, all A and B moves when there are some, and otherwise
/// the C moves.
fn tree_moves<C: Clone>(client: &BufferedContract, steps: Vec<(TBLabel, C)>) -> Vec<(TBLabel, C)> {
    if client.is_success() {
        return steps.into_iter().filter(|(l, _)| l.act == TbAct::Tick).collect();
    }
    if steps.iter().any(|(l, _)| l.is_unaffectible()) {
        return steps.into_iter().filter(|(l, _)| l.is_unaffectible()).collect();
    }
    steps
}

fn kind_of(client: &BufferedContract, has_moves: bool) -> NodeKind {
    match (client, has_moves) {
        (BufferedContract::Zero, _) => NodeKind::Done,
        (_, true) => NodeKind::Inner,
        (_, false) => NodeKind::Fail,
    }
}

/// Builds a member of the regular configuration trees of `client ||| server`
/// where `chooser` resolves the C stages.
pub fn build_config_tree(client: &Contract, server: &Contract, chooser: &mut Chooser<'_>) -> ConfigTree {
    let mut tree = ConfigTree { nodes: Vec::new() };
    let mut path: Vec<((BufferedKey, BufferedKey), usize)> = Vec::new();
    grow_tb(&mut tree, TBConfig::new(client, server), chooser, &mut path);
    tree
}

fn grow_tb(
    tree: &mut ConfigTree,
    cfg: TBConfig,
    chooser: &mut Chooser<'_>,
    path: &mut Vec<((BufferedKey, BufferedKey), usize)>,
) -> usize {
    let id = tree.nodes.len();
    let mut moves = tree_moves(&cfg.client, tb_steps(&cfg));
    if !cfg.client.is_success() && moves.iter().all(|(l, _)| l.is_c_sync()) && moves.len() > 1 {
        let labels: Vec<TBLabel> = moves.iter().map(|(l, _)| l.clone()).collect();
        let pick = chooser(&cfg, &labels).min(moves.len() - 1);
        moves = vec![moves.swap_remove(pick)];
    }
    let track = is_plain(&cfg.client) && is_plain(&cfg.server);
    tree.nodes.push(TreeNode { kind: kind_of(&cfg.client, !moves.is_empty()), config: cfg.clone(), orch: None, children: vec![] });
    if track {
        path.push((cfg.key(), id));
    }
    for (label, next) in moves {
        let back = if is_plain(&next.client) && is_plain(&next.server) {
            let key = next.key();
            path.iter().find(|(k, _)| *k == key).map(|(_, v)| *v)
        } else {
            None
        };
        let edge = match back {
            Some(target) => Edge { label, target, back: true },
            None => Edge { label, target: grow_tb(tree, next, chooser, path), back: false },
        };
        tree.nodes[id].children.push(edge);
    }
    if track {
        path.pop();
    }
    id
}

/// Whether no failure leaf occurs in the tree.
pub fn tree_is_xfree(t: &ConfigTree) -> bool {
    t.nodes.iter().all(|n| n.kind != NodeKind::Fail)
}

/// The configurations of the turn-based LTS from which the mediator can
/// force every play to be infinite or to end with success, computed as a
/// greatest fixed point over the finite quotient graph.
fn winning_region(client: &Contract, server: &Contract) -> HashMap<(BufferedKey, BufferedKey), (TBConfig, bool)> {
    let configs = tb_reachable(&TBConfig::new(client, server));
    let mut region: HashMap<_, _> = configs.into_iter().map(|c| (c.key(), (c, true))).collect();
    loop {
        let mut changed = false;
        let keys: Vec<_> = region.keys().cloned().collect();
        for k in keys {
            let cfg = region[&k].0.clone();
            if !region[&k].1 {
                continue;
            }
            let moves = tree_moves(&cfg.client, tb_steps(&cfg));
            let good = |n: &TBConfig| region.get(&n.key()).is_some_and(|(_, w)| *w);
            let ok = match &cfg.client {
                BufferedContract::Zero => true,
                _ if moves.is_empty() => false,
                _ if moves[0].0.is_unaffectible() => moves.iter().all(|(_, n)| good(n)),
                _ => moves.iter().any(|(_, n)| good(n)),
            };
            if !ok {
                region.get_mut(&k).expect("present").1 = false;
                changed = true;
            }
        }
        if !changed {
            return region;
        }
    }
}

/// Whether some configuration tree of the pair is free of failure leaves,
/// i.e. whether the mediator has a winning univocal strategy.
pub fn exists_xfree_tree(client: &Contract, server: &Contract) -> bool {
    let region = winning_region(client, server);
    region[&TBConfig::new(client, server).key()].1
}

/// A failure-free configuration tree when one exists, built with a chooser
/// that stays inside the winning region.
pub fn xfree_tree(client: &Contract, server: &Contract) -> Option<ConfigTree> {
    let region = winning_region(client, server);
    if !region[&TBConfig::new(client, server).key()].1 {
        return None;
    }
    let mut chooser = |cfg: &TBConfig, labels: &[TBLabel]| {
        let steps = tb_steps(cfg);
        labels
            .iter()
            .position(|l| {
                steps.iter().any(|(m, n)| m == l && region.get(&n.key()).is_some_and(|(_, w)| *w))
            })
            .unwrap_or(0)
    };
    Some(build_config_tree(client, server, &mut chooser))
}

// ---------------------------------------------------------------------------
// Strategies
// ---------------------------------------------------------------------------

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GameError {
    #[error("the strategy tree contains a failure leaf at node {0}")]
    FailureLeaf(usize),
    #[error("conflicting orchestrator entries at node {0}")]
    Conflict(usize),
    #[error("unexpected move {1} at node {0}")]
    UnexpectedMove(usize, String),
}

/// A univocal strategy for the mediator, stored as a configuration tree.
/// The suggestion for a play is the C move leaving the node it reaches.
#[derive(Clone, Debug, Serialize)]
pub struct Strategy {
    pub tree: ConfigTree,
}

impl Strategy {
    pub fn from_tree(tree: ConfigTree) -> Strategy {
        Strategy { tree }
    }

    /// The suggested events after `play`: empty when the play leaves the
    /// tree or reaches a node where the mediator does not move.
    pub fn lookup(&self, play: &[PlayEvent]) -> Vec<PlayEvent> {
        let Some(v) = self.tree.walk(play) else { return Vec::new() };
        self.tree.nodes[v]
            .children
            .iter()
            .filter(|e| e.label.player == Player::C)
            .map(|e| PlayEvent { time: play.len() + 1, label: e.label.clone() })
            .collect()
    }

    /// At most one suggestion at every node.
    pub fn is_univocal(&self) -> bool {
        self.tree.nodes.iter().all(|n| n.children.iter().filter(|e| e.label.player == Player::C).count() <= 1)
    }

    /// This strategy with the suggestion after `play` withdrawn.
    pub fn without_suggestion(&self, play: &[PlayEvent]) -> Strategy {
        let mut out = self.clone();
        if let Some(v) = out.tree.walk(play) {
            out.tree.nodes[v].children.retain(|e| e.label.player != Player::C);
        }
        out
    }
}

/// The strategy induced by an orchestrator: the tree of the turn-based
/// orchestrated configurations, suggesting the C move the orchestrator
/// enables, and success whenever the client is `1`.
pub fn strategy_from_orch(f: &Orch, client: &Contract, server: &Contract) -> Strategy {
    let mut tree = ConfigTree { nodes: Vec::new() };
    let mut path = Vec::new();
    grow_orch(&mut tree, TBOrchConfig::new(client, f, server), &mut path);
    Strategy { tree }
}

type OrchKey = (BufferedKey, crate::regular::CanonicalKey<crate::orch::OrchTag>, BufferedKey);

fn grow_orch(tree: &mut ConfigTree, cfg: TBOrchConfig, path: &mut Vec<(OrchKey, usize)>) -> usize {
    let id = tree.nodes.len();
    let moves = tree_moves(&cfg.client, tb_orch_steps(&cfg));
    let track = is_plain(&cfg.client) && is_plain(&cfg.server);
    tree.nodes.push(TreeNode {
        kind: kind_of(&cfg.client, !moves.is_empty()),
        config: cfg.erase(),
        orch: Some(cfg.orch.clone()),
        children: vec![],
    });
    if track {
        path.push((cfg.key(), id));
    }
    for (label, next) in moves {
        let back = if is_plain(&next.client) && is_plain(&next.server) {
            let key = next.key();
            path.iter().find(|(k, _)| *k == key).map(|(_, v)| *v)
        } else {
            None
        };
        let edge = match back {
            Some(target) => Edge { label, target, back: true },
            None => Edge { label, target: grow_orch(tree, next, path), back: false },
        };
        tree.nodes[id].children.push(edge);
    }
    if track {
        path.pop();
    }
    id
}

/// Whether every play of the game on `client ||| server` that conforms to
/// the strategy is won by the mediator. A successful client must be closed
/// by the suggested success move; a stuck play with an unsuccessful client,
/// a missing or ambiguous suggestion, or a move the tree does not cover is
/// a loss; a play revisiting a tree position forever is won.
pub fn is_winning_strategy(sigma: &Strategy, client: &Contract, server: &Contract) -> bool {
    let tree = &sigma.tree;
    let mut done: HashSet<(usize, (BufferedKey, BufferedKey))> = HashSet::new();
    let mut stack = vec![(0usize, TBConfig::new(client, server))];
    while let Some((v, cfg)) = stack.pop() {
        if !done.insert((v, cfg.key())) {
            continue;
        }
        let node = &tree.nodes[v];
        let follow = |l: &TBLabel| node.children.iter().find(|e| e.label == *l).map(|e| e.target);
        let steps = tb_steps(&cfg);
        if cfg.client == BufferedContract::Zero {
            continue;
        }
        if cfg.client.is_success() {
            if follow(&TBLabel::tick()).is_none() {
                return false;
            }
            continue;
        }
        let unaffectible: Vec<_> = steps.iter().filter(|(l, _)| l.is_unaffectible()).collect();
        if !unaffectible.is_empty() {
            for (l, n) in unaffectible {
                match follow(l) {
                    Some(w) => stack.push((w, n.clone())),
                    None => return false,
                }
            }
            continue;
        }
        let suggested: Vec<_> = node.children.iter().filter(|e| e.label.player == Player::C).collect();
        let [e] = suggested.as_slice() else { return false };
        match steps.iter().find(|(l, _)| *l == e.label) {
            Some((_, n)) => stack.push((e.target, n.clone())),
            None => return false,
        }
    }
    true
}

/// Reads an orchestrator off a strategy tree. Successful clients give `1`,
/// buffering nodes collect the disjuncts of their children, consumption of a
/// buffered output gives a plain action, a C move gives an affectible action,
/// and back edges give recursion.
pub fn orch_from_strategy(sigma: &Strategy) -> Result<Orch, GameError> {
    let tree = &sigma.tree;
    if let Some(v) = tree.nodes.iter().position(|n| n.kind == NodeKind::Fail) {
        return Err(GameError::FailureLeaf(v));
    }
    let targets: HashSet<usize> = tree.nodes.iter().flat_map(|n| n.children.iter()).filter(|e| e.back).map(|e| e.target).collect();
    orch_of_node(tree, 0, &targets)
}

fn node_var(v: usize) -> String {
    format!("x{v}")
}

fn orch_of_node(tree: &ConfigTree, v: usize, targets: &HashSet<usize>) -> Result<Orch, GameError> {
    let node = &tree.nodes[v];
    let child = |e: &Edge| -> Result<Orch, GameError> {
        if e.back {
            Ok(Orch::var(&node_var(e.target)))
        } else {
            orch_of_node(tree, e.target, targets)
        }
    };
    let body = if node.config.client.is_success() || node.kind == NodeKind::Done {
        Orch::Idle
    } else if node.children.iter().all(|e| e.label.is_buffering_output()) {
        let mut entries: Vec<(OAct, Orch)> = Vec::new();
        for e in &node.children {
            match child(e)? {
                Orch::Disj(es) => {
                    for (a, k) in es {
                        match entries.iter().find(|(b, _)| *b == a) {
                            Some((_, k2)) if *k2 != k => return Err(GameError::Conflict(v)),
                            Some(_) => {}
                            None => entries.push((a, k)),
                        }
                    }
                }
                other => return Err(GameError::UnexpectedMove(v, format!("{} then {other}", e.label))),
            }
        }
        Orch::disj(entries).map_err(|_| GameError::Conflict(v))?
    } else {
        let [e] = node.children.as_slice() else {
            return Err(GameError::UnexpectedMove(v, "several non-buffering moves".into()));
        };
        let k = child(e)?;
        match (&e.label.player, &e.label.act) {
            (Player::A, TbAct::Input(a)) => Orch::act(OAct::server_out(a), k),
            (Player::B, TbAct::Input(a)) => Orch::act(OAct::server_in(a), k),
            (Player::C, TbAct::Input(a)) => {
                let client_outputs = matches!(node.config.client, BufferedContract::Plain(Contract::Affectible(_)));
                let act = if client_outputs { OAct::server_in(a) } else { OAct::server_out(a) };
                Orch::plus(act, k)
            }
            _ => return Err(GameError::UnexpectedMove(v, e.label.to_string())),
        }
    };
    Ok(if targets.contains(&v) { Orch::rec(&node_var(v), body) } else { body })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_contract;

    fn c(s: &str) -> Contract {
        parse_contract(s).unwrap()
    }

    #[test]
    fn success_client_tree_is_one_done_edge() {
        let t = build_config_tree(&Contract::Success, &c("?a"), &mut label_chooser(&[]));
        assert_eq!(t.nodes.len(), 2);
        assert_eq!(t.root().children[0].label, TBLabel::tick());
        assert_eq!(t.nodes[1].kind, NodeKind::Done);
    }

    #[test]
    fn single_failure_tree_is_not_xfree() {
        let t = build_config_tree(&c("?a"), &c("?b"), &mut label_chooser(&[]));
        assert_eq!(t.nodes.len(), 1);
        assert!(!tree_is_xfree(&t));
    }

    #[test]
    fn recursion_produces_back_edges() {
        let t = build_config_tree(&c("rec x. !a.x + !b"), &c("rec y. ?a.y"), &mut label_chooser(&["a"]));
        assert!(t.nodes.iter().any(|n| n.children.iter().any(|e| e.back)));
        assert!(tree_is_xfree(&t));
    }

    #[test]
    fn winning_needs_closing_success() {
        let play = play_from_labels(&[TBLabel::c("a"), TBLabel::tick()]);
        assert!(winning(&play, false, Player::C));
        assert!(!winning(&play[..1], false, Player::C));
        assert!(winning(&play[..1], true, Player::C));
        assert!(!winning(&[], false, Player::C));
    }

    #[test]
    fn idle_on_success_suggests_only_tick() {
        let sigma = strategy_from_orch(&Orch::Idle, &Contract::Success, &c("!a"));
        assert_eq!(sigma.lookup(&[]), vec![PlayEvent { time: 1, label: TBLabel::tick() }]);
        assert!(is_winning_strategy(&sigma, &Contract::Success, &c("!a")));
        assert_eq!(orch_from_strategy(&sigma).unwrap(), Orch::Idle);
    }
}
