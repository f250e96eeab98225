//! Generic operations on equi-recursive terms viewed as regular trees.
//!
//! A term type only has to say how its root looks once recursion has been
//! unfolded: a tag (constructor plus labels) and an ordered list of child
//! terms. Tree equality, the finite graph of reachable subterms and a
//! canonical hashable key are then shared by contracts and orchestrators.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt::Debug;
use std::hash::Hash;

use serde::Serialize;

pub trait RegularTerm: Clone + Eq + Hash {
    type Tag: Clone + Eq + Hash + Ord + Debug;

    /// The root of the term after unfolding binders, split into its tag and
    /// its ordered children. Only called on closed terms.
    fn observe(&self) -> (Self::Tag, Vec<Self>);
}

/// Decides whether two closed terms denote the same regular tree. Pairs of
/// terms already assumed equal are not revisited, which makes the search
/// finite because each term has finitely many syntactic subterm unfoldings.
pub fn bisimilar<T: RegularTerm>(a: &T, b: &T) -> bool {
    let mut seen: HashSet<(T, T)> = HashSet::new();
    let mut stack = vec![(a.clone(), b.clone())];
    while let Some((x, y)) = stack.pop() {
        if x == y || !seen.insert((x.clone(), y.clone())) {
            continue;
        }
        let (tx, kx) = x.observe();
        let (ty, ky) = y.observe();
        if tx != ty || kx.len() != ky.len() {
            return false;
        }
        stack.extend(kx.into_iter().zip(ky));
    }
    true
}

/// The finite graph of subterms reachable from a root. Node 0 is the root.
#[derive(Clone, Debug)]
pub struct TermGraph<Tag> {
    pub nodes: Vec<(Tag, Vec<usize>)>,
}

pub fn term_graph<T: RegularTerm>(root: &T) -> TermGraph<T::Tag> {
    let mut index: HashMap<T, usize> = HashMap::new();
    let mut nodes: Vec<Option<(T::Tag, Vec<usize>)>> = Vec::new();
    let mut queue = VecDeque::new();
    index.insert(root.clone(), 0);
    nodes.push(None);
    queue.push_back((root.clone(), 0usize));
    while let Some((t, id)) = queue.pop_front() {
        let (tag, kids) = t.observe();
        let mut ids = Vec::with_capacity(kids.len());
        for k in kids {
            let next = nodes.len();
            let kid = *index.entry(k.clone()).or_insert_with(|| {
                queue.push_back((k, next));
                next
            });
            if kid == next {
                nodes.push(None);
            }
            ids.push(kid);
        }
        nodes[id] = Some((tag, ids));
    }
    TermGraph {
        nodes: nodes.into_iter().map(|n| n.expect("every node is expanded")).collect(),
    }
}

/// Coarsest partition of the graph nodes into tree-equal classes, by
/// iterated refinement on (tag, classes of children).
pub fn minimize<Tag: Clone + Eq + Hash + Ord>(g: &TermGraph<Tag>) -> Vec<usize> {
    let mut block: Vec<usize> = {
        let mut ids: HashMap<&Tag, usize> = HashMap::new();
        g.nodes
            .iter()
            .map(|(t, _)| {
                let n = ids.len();
                *ids.entry(t).or_insert(n)
            })
            .collect()
    };
    let mut count = block.iter().copied().max().map_or(0, |m| m + 1);
    loop {
        let mut ids: HashMap<(usize, Vec<usize>), usize> = HashMap::new();
        let next: Vec<usize> = g
            .nodes
            .iter()
            .enumerate()
            .map(|(v, (_, kids))| {
                let sig = (block[v], kids.iter().map(|k| block[*k]).collect::<Vec<_>>());
                let n = ids.len();
                *ids.entry(sig).or_insert(n)
            })
            .collect();
        let next_count = ids.len();
        block = next;
        if next_count == count {
            return block;
        }
        count = next_count;
    }
}

/// The minimal graph of a term, numbered breadth-first from the root.
/// Equal regular trees have identical keys.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct CanonicalKey<Tag> {
    pub nodes: Vec<(Tag, Vec<u32>)>,
}

pub fn canonical_key<T: RegularTerm>(root: &T) -> CanonicalKey<T::Tag> {
    canonical_from_graph(&term_graph(root))
}

pub fn canonical_from_graph<Tag: Clone + Eq + Hash + Ord>(g: &TermGraph<Tag>) -> CanonicalKey<Tag> {
    let block = minimize(g);
    let mut repr: HashMap<usize, usize> = HashMap::new();
    for (v, b) in block.iter().enumerate() {
        repr.entry(*b).or_insert(v);
    }
    let mut number: HashMap<usize, u32> = HashMap::new();
    let mut order = Vec::new();
    let mut queue = VecDeque::new();
    number.insert(block[0], 0);
    queue.push_back(block[0]);
    while let Some(b) = queue.pop_front() {
        order.push(b);
        for k in &g.nodes[repr[&b]].1 {
            let kb = block[*k];
            if !number.contains_key(&kb) {
                number.insert(kb, number.len() as u32);
                queue.push_back(kb);
            }
        }
    }
    let nodes = order
        .into_iter()
        .map(|b| {
            let (tag, kids) = &g.nodes[repr[&b]];
            (tag.clone(), kids.iter().map(|k| number[&block[*k]]).collect())
        })
        .collect();
    CanonicalKey { nodes }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// A toy term language: explicit graphs given as adjacency lists.
    #[derive(Clone, Debug, PartialEq, Eq, Hash)]
    struct Node {
        graph: &'static [(char, &'static [usize])],
        at: usize,
    }

    impl RegularTerm for Node {
        type Tag = char;
        fn observe(&self) -> (char, Vec<Node>) {
            let (tag, kids) = self.graph[self.at];
            let kids = kids
                .iter()
                .map(|k| Node { graph: self.graph, at: *k })
                .collect();
            (tag, kids)
        }
    }

    static LOOP1: &[(char, &[usize])] = &[('a', &[0])];
    static LOOP2: &[(char, &[usize])] = &[('a', &[1]), ('a', &[0])];
    static LOOP_B: &[(char, &[usize])] = &[('a', &[1]), ('b', &[0])];

    #[test]
    fn unrolled_loops_are_equal() {
        let a = Node { graph: LOOP1, at: 0 };
        let b = Node { graph: LOOP2, at: 0 };
        assert!(bisimilar(&a, &b));
        assert_eq!(canonical_key(&a), canonical_key(&b));
    }

    #[test]
    fn different_tags_differ() {
        let a = Node { graph: LOOP1, at: 0 };
        let b = Node { graph: LOOP_B, at: 0 };
        assert!(!bisimilar(&a, &b));
        assert_ne!(canonical_key(&a), canonical_key(&b));
    }

    #[test]
    fn minimize_merges_equal_nodes() {
        let g = term_graph(&Node { graph: LOOP2, at: 0 });
        let blocks = minimize(&g);
        assert_eq!(blocks[0], blocks[1]);
    }
}
