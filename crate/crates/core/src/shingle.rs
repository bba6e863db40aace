//! Operator skeletons and shingle profiles.
//!
//! A skeleton is a formula with identifiers, literals and the number sets
//! erased. Two shingle families are drawn from it: depth shingles are
//! windows of length `n` along root-to-leaf label paths, and structure
//! shingles are windows of length `n` over `[parent, child1, ..., childm]`
//! sequences. Depth windows are enumerated per tree node (a window is the
//! chain ending at its lowest node), so a window on a prefix shared by
//! several paths is counted once.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::formula::{formula_hash, Formula, Kind};

pub const DEFAULT_SHINGLE_SIZE: usize = 3;
/// Default count above which a shingle is disregarded.
pub const DEFAULT_PRUNE_THRESHOLD: u64 = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum ShingleKind {
    Depth,
    Structure,
}

/// An ordered tuple of operator labels, compared as an atomic element.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Shingle {
    kind: ShingleKind,
    labels: Box<[Kind]>,
}

impl Shingle {
    pub fn new(kind: ShingleKind, labels: &[Kind]) -> Shingle {
        debug_assert!(labels.iter().all(|l| !l.is_atom_leaf()));
        Shingle {
            kind,
            labels: labels.into(),
        }
    }

    pub fn kind(&self) -> ShingleKind {
        self.kind
    }

    pub fn labels(&self) -> &[Kind] {
        &self.labels
    }

    pub fn label_symbols(&self) -> Vec<&'static str> {
        self.labels.iter().map(|k| k.symbol()).collect()
    }
}

impl fmt::Display for Shingle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.label_symbols().join(","))
    }
}

/// Shingle multiset in deterministic (sorted) order.
pub type ShingleBag = BTreeMap<Shingle, u32>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("formula has no operator structure")]
pub struct EmptySkeleton;

#[derive(Clone, Debug, PartialEq, Eq)]
struct SkeletonNode {
    label: Kind,
    children: Vec<usize>,
}

/// Operator tree of a formula after leaf erasure. Node 0 is the root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Skeleton {
    nodes: Vec<SkeletonNode>,
}

impl Skeleton {
    /// Builds a skeleton from `(label, children)` in pre-order; used by tests
    /// that need shapes no formula produces.
    pub fn from_nested(label: Kind, children: Vec<Skeleton>) -> Skeleton {
        let mut nodes = vec![SkeletonNode {
            label,
            children: Vec::new(),
        }];
        for child in children {
            let offset = nodes.len();
            nodes[0].children.push(offset);
            nodes.extend(child.nodes.into_iter().map(|mut n| {
                n.children.iter_mut().for_each(|c| *c += offset);
                n
            }));
        }
        Skeleton { nodes }
    }

    pub fn leaf(label: Kind) -> Skeleton {
        Skeleton::from_nested(label, Vec::new())
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root_label(&self) -> Kind {
        self.nodes[0].label
    }

    fn write_node(&self, id: usize, out: &mut String) {
        let node = &self.nodes[id];
        out.push_str(node.label.symbol());
        for &c in &node.children {
            out.push(' ');
            if self.nodes[c].children.is_empty() {
                out.push_str(self.nodes[c].label.symbol());
            } else {
                out.push('(');
                self.write_node(c, out);
                out.push(')');
            }
        }
    }
}

impl fmt::Display for Skeleton {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        self.write_node(0, &mut s);
        f.write_str(&s)
    }
}

/// Erases identifiers, literals and number sets; child order is preserved.
pub fn skeleton(f: &Formula) -> Result<Skeleton, EmptySkeleton> {
    // Post-order build into a scratch arena, then renumber in pre-order.
    fn build(f: &Formula, arena: &mut Vec<SkeletonNode>) -> Option<usize> {
        if f.kind().is_atom_leaf() {
            return None;
        }
        let children = f.children().iter().filter_map(|c| build(c, arena)).collect();
        arena.push(SkeletonNode {
            label: f.kind(),
            children,
        });
        Some(arena.len() - 1)
    }
    let mut arena = Vec::new();
    let root = build(f, &mut arena).ok_or(EmptySkeleton)?;
    let mut order = vec![usize::MAX; arena.len()];
    let mut nodes = Vec::with_capacity(arena.len());
    let mut stack = vec![root];
    while let Some(id) = stack.pop() {
        order[id] = nodes.len();
        nodes.push(id);
        stack.extend(arena[id].children.iter().rev());
    }
    let nodes = nodes
        .into_iter()
        .map(|id| SkeletonNode {
            label: arena[id].label,
            children: arena[id].children.iter().map(|&c| order[c]).collect(),
        })
        .collect();
    Ok(Skeleton { nodes })
}

fn bump(bag: &mut ShingleBag, kind: ShingleKind, labels: &[Kind]) {
    *bag.entry(Shingle::new(kind, labels)).or_insert(0) += 1;
}

/// Windows of length `n` over root-to-leaf label paths, one per chain of nodes.
pub fn depth_shingles(skel: &Skeleton, n: usize) -> ShingleBag {
    assert!(n >= 2, "shingle size must be at least 2");
    let mut bag = ShingleBag::new();
    if skel.is_empty() {
        return bag;
    }
    // Iterative DFS carrying the current root path.
    let mut path: Vec<Kind> = Vec::new();
    let mut stack: Vec<(usize, usize)> = vec![(0, 0)];
    while let Some((id, depth)) = stack.pop() {
        path.truncate(depth);
        path.push(skel.nodes[id].label);
        if path.len() >= n {
            bump(&mut bag, ShingleKind::Depth, &path[path.len() - n..]);
        }
        stack.extend(skel.nodes[id].children.iter().rev().map(|&c| (c, depth + 1)));
    }
    bag
}

/// Windows of length `n` over each `[parent, children...]` sequence.
pub fn structure_shingles(skel: &Skeleton, n: usize) -> ShingleBag {
    assert!(n >= 2, "shingle size must be at least 2");
    let mut bag = ShingleBag::new();
    let mut seq = Vec::new();
    for node in &skel.nodes {
        if node.children.len() + 1 < n {
            continue;
        }
        seq.clear();
        seq.push(node.label);
        seq.extend(node.children.iter().map(|&c| skel.nodes[c].label));
        for w in seq.windows(n) {
            bump(&mut bag, ShingleKind::Structure, w);
        }
    }
    bag
}

/// Depth and structure shingle multisets of one formula.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShingleProfile {
    pub depth: ShingleBag,
    pub structure: ShingleBag,
    pub source_hash: u64,
}

impl ShingleProfile {
    pub fn is_empty(&self) -> bool {
        self.depth.is_empty() && self.structure.is_empty()
    }

    pub fn bag(&self, kind: ShingleKind) -> &ShingleBag {
        match kind {
            ShingleKind::Depth => &self.depth,
            ShingleKind::Structure => &self.structure,
        }
    }

    /// Total multiplicity over both kinds.
    pub fn total(&self) -> u64 {
        self.depth
            .values()
            .chain(self.structure.values())
            .map(|&c| u64::from(c))
            .sum()
    }

    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Entry {
            labels: Vec<&'static str>,
            count: u32,
        }
        let entries = |bag: &ShingleBag| -> Vec<Entry> {
            bag.iter()
                .map(|(s, &count)| Entry {
                    labels: s.label_symbols(),
                    count,
                })
                .collect()
        };
        serde_json::json!({
            "depth": entries(&self.depth),
            "structure": entries(&self.structure),
        })
    }
}

/// Shingle profile; a structureless formula yields an empty profile.
pub fn profile(f: &Formula, n: usize) -> ShingleProfile {
    let source_hash = formula_hash(f);
    match skeleton(f) {
        Ok(skel) => ShingleProfile {
            depth: depth_shingles(&skel, n),
            structure: structure_shingles(&skel, n),
            source_hash,
        },
        Err(EmptySkeleton) => ShingleProfile {
            depth: ShingleBag::new(),
            structure: ShingleBag::new(),
            source_hash,
        },
    }
}

/// Pool-wide shingle occurrence counts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightTable {
    counts: BTreeMap<Shingle, u64>,
    pool_size: usize,
    prune_threshold: u64,
}

impl WeightTable {
    pub fn empty(prune_threshold: u64) -> WeightTable {
        WeightTable {
            counts: BTreeMap::new(),
            pool_size: 0,
            prune_threshold,
        }
    }

    pub fn add(&mut self, p: &ShingleProfile) {
        for (s, &c) in p.depth.iter().chain(p.structure.iter()) {
            *self.counts.entry(s.clone()).or_insert(0) += u64::from(c);
        }
        self.pool_size += 1;
    }

    /// Adds another table's counts. Associative and commutative.
    pub fn merge(&mut self, other: &WeightTable) {
        for (s, &c) in &other.counts {
            *self.counts.entry(s.clone()).or_insert(0) += c;
        }
        self.pool_size += other.pool_size;
    }

    pub fn count(&self, s: &Shingle) -> u64 {
        self.counts.get(s).copied().unwrap_or(0)
    }

    /// `1 / cnt` for shingles seen at most `prune_threshold` times, else 0.
    pub fn weight(&self, s: &Shingle) -> f64 {
        match self.count(s) {
            0 => 0.0,
            c if c > self.prune_threshold => 0.0,
            c => 1.0 / c as f64,
        }
    }

    pub fn pool_size(&self) -> usize {
        self.pool_size
    }

    pub fn prune_threshold(&self) -> u64 {
        self.prune_threshold
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Shingle, u64)> {
        self.counts.iter().map(|(s, &c)| (s, c))
    }
}

pub fn build_weight_table(pool: &[ShingleProfile], prune_threshold: u64) -> WeightTable {
    let mut table = WeightTable::empty(prune_threshold);
    for p in pool {
        table.add(p);
    }
    table
}

/// Same result as [`build_weight_table`], counting chunks of the pool in parallel.
pub fn build_weight_table_parallel(pool: &[ShingleProfile], prune_threshold: u64) -> WeightTable {
    pool.par_chunks(64)
        .map(|chunk| build_weight_table(chunk, prune_threshold))
        .reduce(
            || WeightTable::empty(prune_threshold),
            |mut a, b| {
                a.merge(&b);
                a
            },
        )
}
