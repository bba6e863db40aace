//! Brute-force reference for shingles, weights, scores and selection.
//!
//! Shingles are computed by materialising every root-to-leaf path of the
//! skeleton and sliding windows over it; a window is counted once per chain
//! of distinct nodes.

use std::collections::{BTreeMap, BTreeSet};

use obsel_core::formula::{Formula, Kind, Payload};
use obsel_core::similarity::ScoreParams;

/// 0 for depth shingles, 1 for structure shingles, then the labels.
pub type Key = (u8, Vec<Kind>);
pub type Bag = BTreeMap<Key, u64>;

struct Tree {
    label: Kind,
    children: Vec<Tree>,
}

fn erase(f: &Formula) -> Option<Tree> {
    if matches!(
        f.kind(),
        Kind::Ident | Kind::IntLit | Kind::Nat | Kind::Int | Kind::MetaVar
    ) {
        return None;
    }
    Some(Tree {
        label: f.kind(),
        children: f.children().iter().filter_map(erase).collect(),
    })
}

fn paths(t: &Tree, next_id: &mut usize, prefix: &mut Vec<(usize, Kind)>, out: &mut Vec<Vec<(usize, Kind)>>) {
    let id = *next_id;
    *next_id += 1;
    prefix.push((id, t.label));
    if t.children.is_empty() {
        out.push(prefix.clone());
    }
    for c in &t.children {
        paths(c, next_id, prefix, out);
    }
    prefix.pop();
}

fn sequences(t: &Tree, out: &mut Vec<Vec<Kind>>) {
    if !t.children.is_empty() {
        let mut seq = vec![t.label];
        seq.extend(t.children.iter().map(|c| c.label));
        out.push(seq);
    }
    for c in &t.children {
        sequences(c, out);
    }
}

pub fn bag(f: &Formula, n: usize) -> Bag {
    let mut out = Bag::new();
    let Some(tree) = erase(f) else {
        return out;
    };
    let mut all_paths = Vec::new();
    paths(&tree, &mut 0, &mut Vec::new(), &mut all_paths);
    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
    for path in &all_paths {
        if path.len() < n {
            continue;
        }
        for start in 0..=path.len() - n {
            let window = &path[start..start + n];
            let ids: Vec<usize> = window.iter().map(|(id, _)| *id).collect();
            if seen.insert(ids) {
                let labels = window.iter().map(|(_, l)| *l).collect();
                *out.entry((0, labels)).or_insert(0) += 1;
            }
        }
    }
    let mut seqs = Vec::new();
    sequences(&tree, &mut seqs);
    for seq in seqs {
        if seq.len() < n {
            continue;
        }
        for start in 0..=seq.len() - n {
            *out.entry((1, seq[start..start + n].to_vec())).or_insert(0) += 1;
        }
    }
    out
}

pub fn pool_counts(bags: &[Bag]) -> BTreeMap<Key, u64> {
    let mut counts = BTreeMap::new();
    for b in bags {
        for (k, c) in b {
            *counts.entry(k.clone()).or_insert(0) += c;
        }
    }
    counts
}

/// Unpruned score: for each kind, the sum of `1/cnt` over shared shingles in
/// key order; structure term scaled by `c`.
pub fn score(goal: &Bag, cand: &Bag, counts: &BTreeMap<Key, u64>, c: f64) -> f64 {
    let term = |kind: u8| {
        let mut sum = 0.0;
        for key in goal.keys().filter(|k| k.0 == kind) {
            if cand.contains_key(key) {
                sum += 1.0 / counts[key] as f64;
            }
        }
        sum
    };
    term(0) + c * term(1)
}

pub fn free_idents(f: &Formula) -> BTreeSet<String> {
    fn walk(f: &Formula, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match f.payload() {
            Payload::Name(name) if f.kind() == Kind::Ident => {
                if !bound.contains(name) {
                    out.insert(name.clone());
                }
            }
            Payload::Bound(vars) => {
                let mark = bound.len();
                bound.extend(vars.iter().cloned());
                for c in f.children() {
                    walk(c, bound, out);
                }
                bound.truncate(mark);
                return;
            }
            _ => {}
        }
        for c in f.children() {
            walk(c, bound, out);
        }
    }
    let mut out = BTreeSet::new();
    walk(f, &mut Vec::new(), &mut out);
    out
}

pub fn closure(goal: &Formula, hyps: &[Formula], rounds: usize) -> BTreeSet<usize> {
    let mut known = free_idents(goal);
    let mut chosen = BTreeSet::new();
    for _ in 0..rounds {
        let joined: Vec<usize> = (0..hyps.len())
            .filter(|i| !chosen.contains(i))
            .filter(|&i| free_idents(&hyps[i]).iter().any(|x| known.contains(x)))
            .collect();
        if joined.is_empty() {
            break;
        }
        for i in joined {
            known.extend(free_idents(&hyps[i]));
            chosen.insert(i);
        }
    }
    chosen
}

/// Reference selection: `(pool index, score)` best first.
pub fn select(goal: &Formula, hyps: &[Formula], lemmas: &[Formula], params: &ScoreParams) -> Vec<(usize, f64)> {
    let ScoreParams {
        n,
        c,
        theta,
        top,
        depth: rounds,
        ..
    } = *params;
    let pool: Vec<&Formula> = hyps.iter().chain(lemmas).collect();
    let bags: Vec<Bag> = pool.iter().map(|f| bag(f, n)).collect();
    let counts = pool_counts(&bags);
    let g = bag(goal, n);
    let scores: Vec<f64> = bags.iter().map(|b| score(&g, b, &counts, c)).collect();

    let mut ranked: Vec<usize> = (0..pool.len()).filter(|&i| scores[i] >= theta).collect();
    ranked.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));
    ranked.truncate(top);

    let mut chosen: BTreeSet<usize> = closure(goal, hyps, rounds);
    chosen.extend(ranked);
    let mut out: Vec<(usize, f64)> = chosen.into_iter().map(|i| (i, scores[i])).collect();
    out.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    out
}
