//! A small sound prover for desk-scale checks.
//!
//! The goal is proved when one of these holds for the goal itself, the goal
//! with one post-state definition `v' = E` unfolded, or the goal with all of
//! them unfolded at once:
//!
//! 1. it is alpha-equivalent to a hypothesis conjunct;
//! 2. it is an instance of the conclusion of a hypothesis
//!    `!xs. P1 & ... => C` (nested quantified implications are flattened)
//!    whose instantiated premises are all hypothesis conjuncts.

use std::collections::HashSet;

use crate::formula::{alpha_normalize, free_identifiers, substitute, substitute_metavars, Binding, Formula, Kind};
use crate::lemma::match_at;
use crate::obligation::{post_state_definitions, rewrite_post_state, ProofObligation};

use super::Verdict;

/// A hypothesis read as `forall vars. premises => conclusion`.
struct Rule {
    vars: Vec<String>,
    premises: Vec<Formula>,
    conclusion: Formula,
}

fn as_rule(h: &Formula) -> Option<Rule> {
    let mut vars: Vec<String> = Vec::new();
    let mut premises: Vec<Formula> = Vec::new();
    let mut f = h;
    loop {
        match f.kind() {
            Kind::Forall => {
                let bound = f.bound_vars();
                if bound.iter().any(|v| vars.contains(v)) {
                    // Shadowing would conflate distinct variables.
                    return None;
                }
                vars.extend(bound.iter().cloned());
                f = &f.children()[0];
            }
            Kind::Implies => {
                premises.extend(f.children()[0].conjuncts().into_iter().cloned());
                f = &f.children()[1];
            }
            _ => break,
        }
    }
    if vars.is_empty() && premises.is_empty() {
        return None;
    }
    // Bound variables become pattern holes.
    let holes: Binding = vars.iter().map(|v| (v.clone(), Formula::meta(v.clone()))).collect();
    let open = |g: &Formula| substitute(g, &holes).ok();
    Some(Rule {
        premises: premises.iter().map(open).collect::<Option<_>>()?,
        conclusion: alpha_normalize(&open(f)?),
        vars,
    })
}

fn candidate_goals(po: &ProofObligation, hyps: &[Formula]) -> Vec<Formula> {
    let mut out = vec![po.goal.clone()];
    for (name, value) in post_state_definitions(hyps) {
        let one: Binding = [(name, value)].into_iter().collect();
        if let Ok(g) = substitute(&po.goal, &one) {
            out.push(g);
        }
    }
    out.extend(rewrite_post_state(&po.goal, hyps));
    out
}

pub fn stub_prove(po: &ProofObligation) -> Verdict {
    let hyps = po.hypothesis_formulas();
    let known: HashSet<Formula> = hyps.iter().flat_map(|h| h.conjuncts()).map(alpha_normalize).collect();
    let rules: Vec<Rule> = hyps.iter().flat_map(|h| h.conjuncts()).filter_map(as_rule).collect();

    for goal in candidate_goals(po, &hyps) {
        let goal = alpha_normalize(&goal);
        if known.contains(&goal) {
            return Verdict::Valid;
        }
        for rule in &rules {
            let Some(binding) = match_at(&rule.conclusion, &goal) else {
                continue;
            };
            if rule.vars.iter().any(|v| !binding.contains(v)) {
                continue;
            }
            // Values may not mention variables bound inside the goal, which
            // alpha normalization has renamed to `%n`.
            let escapes = binding
                .iter()
                .any(|(_, v)| free_identifiers(v).iter().any(|id| id.starts_with('%')));
            if escapes {
                continue;
            }
            let discharged = rule
                .premises
                .iter()
                .all(|p| substitute_metavars(p, &binding).is_ok_and(|inst| known.contains(&alpha_normalize(&inst))));
            if discharged {
                return Verdict::Valid;
            }
        }
    }
    Verdict::Unknown
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{parse_with, ParseOptions};
    use crate::obligation::{Hypothesis, Origin};

    fn p(s: &str) -> Formula {
        parse_with(s, ParseOptions::PRIMED).unwrap()
    }

    fn po(hyps: &[&str], goal: &str) -> ProofObligation {
        let hyps = hyps
            .iter()
            .enumerate()
            .map(|(i, h)| Hypothesis::new(Origin::Guard, format!("h{i}"), p(h)))
            .collect();
        ProofObligation::new("t", "m", "p", hyps, p(goal))
    }

    const LEMMA: &str = "!f. f : BOOKS --> NAT => (!x,y. x : BOOKS & y : NAT => f <+ {x |-> y} : BOOKS --> NAT)";

    #[test]
    fn goal_among_hypotheses() {
        assert_eq!(stub_prove(&po(&["x : NAT"], "x : NAT")), Verdict::Valid);
        assert_eq!(stub_prove(&po(&["a = 1 & x : NAT"], "x : NAT")), Verdict::Valid);
        assert_eq!(stub_prove(&po(&["!y. y : S"], "!z. z : S")), Verdict::Valid);
        assert_eq!(stub_prove(&po(&[], "x : NAT")), Verdict::Unknown);
    }

    #[test]
    fn library_with_and_without_lemma() {
        let base = [
            "library : BOOKS --> NAT",
            "b : BOOKS",
            "n : NAT",
            "library' = library <+ {b |-> n}",
        ];
        let goal = "library' : BOOKS --> NAT";
        assert_eq!(stub_prove(&po(&base, goal)), Verdict::Unknown);
        let mut with = base.to_vec();
        with.push(LEMMA);
        assert_eq!(stub_prove(&po(&with, goal)), Verdict::Valid);
    }

    #[test]
    fn premises_must_all_hold() {
        let hyps = ["library : BOOKS --> NAT", "b : BOOKS", LEMMA];
        assert_eq!(
            stub_prove(&po(&hyps, "library <+ {b |-> n} : BOOKS --> NAT")),
            Verdict::Unknown
        );
    }

    #[test]
    fn skip_event_by_frame() {
        assert_eq!(stub_prove(&po(&["x : NAT", "x' = x"], "x' : NAT")), Verdict::Valid);
    }

    #[test]
    fn modus_ponens_without_quantifier() {
        assert_eq!(stub_prove(&po(&["a = 1 => b = 2", "a = 1"], "b = 2")), Verdict::Valid);
        assert_eq!(stub_prove(&po(&["a = 1 => b = 2"], "b = 2")), Verdict::Unknown);
    }

    #[test]
    fn negated_hypothesis_goal() {
        assert_eq!(stub_prove(&po(&["x : NAT"], "not(x : NAT)")), Verdict::Unknown);
    }
}
