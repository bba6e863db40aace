//! Structural similarity scores and hypothesis/lemma selection.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::formula::{free_identifiers, Formula};
use crate::shingle::{
    build_weight_table, profile, Shingle, ShingleBag, ShingleProfile, WeightTable, DEFAULT_PRUNE_THRESHOLD,
    DEFAULT_SHINGLE_SIZE,
};

/// Scoring and selection knobs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreParams {
    /// Coefficient of the structure-shingle term.
    pub c: f64,
    /// Shingle size.
    pub n: usize,
    /// Shingles counted more often than this in the pool weigh nothing.
    pub tau: u64,
    /// Per-profile cap on the highest-weight shingles kept at scoring time.
    pub k: usize,
    /// Minimum structural score for selection.
    pub theta: f64,
    /// Maximum number of structurally selected candidates.
    pub top: usize,
    /// Rounds of free-identifier closure.
    pub depth: usize,
}

impl Default for ScoreParams {
    fn default() -> Self {
        ScoreParams {
            c: 1.0,
            n: DEFAULT_SHINGLE_SIZE,
            tau: DEFAULT_PRUNE_THRESHOLD,
            k: 64,
            theta: 0.0,
            top: 50,
            depth: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ParamError {
    #[error("structure coefficient must be a finite non-negative number, got {0}")]
    Coefficient(f64),
    #[error("shingle size must be between 2 and 5, got {0}")]
    ShingleSize(usize),
    #[error("score threshold must be finite, got {0}")]
    Threshold(f64),
}

impl ScoreParams {
    /// Same parameters with pruning and capping disabled.
    pub fn unpruned(self) -> ScoreParams {
        ScoreParams {
            tau: u64::MAX,
            k: usize::MAX,
            ..self
        }
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        if !(self.c.is_finite() && self.c >= 0.0) {
            return Err(ParamError::Coefficient(self.c));
        }
        if !(2..=5).contains(&self.n) {
            return Err(ParamError::ShingleSize(self.n));
        }
        if !self.theta.is_finite() {
            return Err(ParamError::Threshold(self.theta));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("similarity of two empty sets is undefined")]
pub struct UndefinedSimilarity;

/// `(|P ∩ Q|, |P ∪ Q|)`, the exact Jaccard ratio.
pub fn jaccard_ratio<T: Ord>(p: &BTreeSet<T>, q: &BTreeSet<T>) -> Result<(usize, usize), UndefinedSimilarity> {
    if p.is_empty() && q.is_empty() {
        return Err(UndefinedSimilarity);
    }
    let common = p.intersection(q).count();
    Ok((common, p.len() + q.len() - common))
}

pub fn jaccard<T: Ord>(p: &BTreeSet<T>, q: &BTreeSet<T>) -> Result<f64, UndefinedSimilarity> {
    let (common, all) = jaccard_ratio(p, q)?;
    Ok(common as f64 / all as f64)
}

/// The `n`-shingles of a plain sequence.
pub fn sequence_shingles<T: Ord + Clone>(seq: &[T], n: usize) -> BTreeSet<Vec<T>> {
    assert!(n >= 1);
    seq.windows(n).map(<[T]>::to_vec).collect()
}

/// Distinct shingles of `bag` that survive pruning, restricted to the `k`
/// heaviest (ties broken by shingle order).
fn scoring_set<'a>(bag: &'a ShingleBag, w: &WeightTable, k: usize) -> BTreeSet<&'a Shingle> {
    let mut weighted: Vec<(&Shingle, f64)> = bag
        .keys()
        .map(|s| (s, w.weight(s)))
        .filter(|&(_, wt)| wt > 0.0)
        .collect();
    if weighted.len() > k {
        weighted.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        weighted.truncate(k);
    }
    weighted.into_iter().map(|(s, _)| s).collect()
}

fn intersection_weight(p: &ShingleBag, q: &ShingleBag, w: &WeightTable, k: usize) -> f64 {
    let ps = scoring_set(p, w, k);
    let qs = scoring_set(q, w, k);
    // BTreeSet intersection iterates in shingle order: a fixed summation order.
    ps.intersection(&qs).fold(0.0, |acc, s| acc + w.weight(s))
}

/// Weighted shingle overlap: depth term plus `c` times the structure term.
pub fn weighted_score(p: &ShingleProfile, q: &ShingleProfile, w: &WeightTable, params: &ScoreParams) -> f64 {
    let depth = intersection_weight(&p.depth, &q.depth, w, params.k);
    let structure = intersection_weight(&p.structure, &q.structure, w, params.k);
    depth + params.c * structure
}

/// Hypotheses reachable from the goal through shared free identifiers in at
/// most `rounds` steps.
pub fn free_ident_closure(goal: &Formula, hypotheses: &[Formula], rounds: usize) -> BTreeSet<usize> {
    let idents: Vec<BTreeSet<String>> = hypotheses.iter().map(free_identifiers).collect();
    let mut known = free_identifiers(goal);
    let mut selected = BTreeSet::new();
    for _ in 0..rounds {
        let fresh: Vec<usize> = (0..hypotheses.len())
            .filter(|i| !selected.contains(i))
            .filter(|&i| !idents[i].is_disjoint(&known))
            .collect();
        if fresh.is_empty() {
            break;
        }
        for i in fresh {
            known.extend(idents[i].iter().cloned());
            selected.insert(i);
        }
    }
    selected
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    #[serde(rename = "hyp")]
    Hypothesis,
    Lemma,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Via {
    FreeIdent,
    Structural,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedCandidate {
    /// Position within its source list.
    pub index: usize,
    pub source: Source,
    pub score: f64,
    pub via: Via,
}

/// Profiles, pool weights and goal scores for one selection problem.
pub struct ScoredPool {
    pub goal: ShingleProfile,
    pub candidates: Vec<ShingleProfile>,
    pub table: WeightTable,
    pub scores: Vec<f64>,
}

impl ScoredPool {
    /// Scores every candidate against `goal` over a pool made of the candidates.
    pub fn new(goal: &Formula, candidates: &[&Formula], params: &ScoreParams) -> ScoredPool {
        let profiles: Vec<ShingleProfile> = candidates.par_iter().map(|f| profile(f, params.n)).collect();
        let table = build_weight_table(&profiles, params.tau);
        let goal = profile(goal, params.n);
        let scores = profiles
            .par_iter()
            .map(|q| weighted_score(&goal, q, &table, params))
            .collect();
        ScoredPool {
            goal,
            candidates: profiles,
            table,
            scores,
        }
    }
}

/// Union of free-identifier closure over the hypotheses and the top
/// structural matches over hypotheses and lemma bodies, best first.
pub fn select(
    goal: &Formula,
    hypotheses: &[Formula],
    lemma_bodies: &[Formula],
    params: &ScoreParams,
) -> Vec<RankedCandidate> {
    let all: Vec<&Formula> = hypotheses.iter().chain(lemma_bodies).collect();
    let pool = ScoredPool::new(goal, &all, params);
    let by_ident = free_ident_closure(goal, hypotheses, params.depth);

    let mut by_score: Vec<usize> = (0..all.len()).filter(|&i| pool.scores[i] >= params.theta).collect();
    by_score.sort_by(|&a, &b| pool.scores[b].total_cmp(&pool.scores[a]).then(a.cmp(&b)));
    by_score.truncate(params.top);

    let chosen: BTreeSet<usize> = by_ident.iter().copied().chain(by_score).collect();
    let mut out: Vec<(usize, RankedCandidate)> = chosen
        .into_iter()
        .map(|i| {
            let (source, index) = if i < hypotheses.len() {
                (Source::Hypothesis, i)
            } else {
                (Source::Lemma, i - hypotheses.len())
            };
            let via = if by_ident.contains(&i) {
                Via::FreeIdent
            } else {
                Via::Structural
            };
            let candidate = RankedCandidate {
                index,
                source,
                score: pool.scores[i],
                via,
            };
            (i, candidate)
        })
        .collect();
    out.sort_by(|(ia, a), (ib, b)| b.score.total_cmp(&a.score).then(ia.cmp(ib)));
    out.into_iter().map(|(_, c)| c).collect()
}
