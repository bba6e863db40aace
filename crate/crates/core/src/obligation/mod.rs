//! Machine models and invariant-preservation proof obligations.

mod machine;

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::formula::{parse_with, prime, substitute, Binding, Fnv1a, Formula, Kind, ParseOptions};
use crate::similarity::{RankedCandidate, Source};

pub use machine::{parse_machine, FilePos, ModelError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ActionKind {
    /// `x := E`
    Becomes,
    /// `x :| P`, with `x'` free in `P`.
    BecomesSuchThat,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Event {
    pub name: String,
    pub params: Vec<String>,
    pub guards: Vec<(String, Formula)>,
    /// `(label, (variable, kind, formula))`
    pub actions: Vec<(String, (String, ActionKind, Formula))>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MachineModel {
    pub name: String,
    pub project: String,
    pub sets: Vec<String>,
    pub constants: Vec<String>,
    pub axioms: Vec<(String, Formula)>,
    pub variables: Vec<String>,
    pub invariants: Vec<(String, Formula)>,
    pub events: Vec<Event>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Axiom,
    Invariant,
    Guard,
    #[serde(rename = "ba")]
    BeforeAfter,
    Frame,
    Lemma,
}

impl Origin {
    pub fn as_str(self) -> &'static str {
        match self {
            Origin::Axiom => "axiom",
            Origin::Invariant => "invariant",
            Origin::Guard => "guard",
            Origin::BeforeAfter => "ba",
            Origin::Frame => "frame",
            Origin::Lemma => "lemma",
        }
    }

    fn parse(s: &str) -> Option<Origin> {
        [
            Origin::Axiom,
            Origin::Invariant,
            Origin::Guard,
            Origin::BeforeAfter,
            Origin::Frame,
            Origin::Lemma,
        ]
        .into_iter()
        .find(|o| o.as_str() == s)
    }
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hypothesis {
    pub origin: Origin,
    pub label: String,
    pub formula: Formula,
}

impl Hypothesis {
    pub fn new(origin: Origin, label: impl Into<String>, formula: Formula) -> Hypothesis {
        Hypothesis {
            origin,
            label: label.into(),
            formula,
        }
    }
}

/// A sequent `hypotheses |- goal` with provenance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProofObligation {
    pub id: String,
    pub machine: String,
    pub project: String,
    pub hypotheses: Vec<Hypothesis>,
    pub goal: Formula,
    pub hash: u64,
}

impl ProofObligation {
    pub fn new(
        id: impl Into<String>,
        machine: impl Into<String>,
        project: impl Into<String>,
        hypotheses: Vec<Hypothesis>,
        goal: Formula,
    ) -> ProofObligation {
        let hash = sequent_hash(&hypotheses, &goal);
        ProofObligation {
            id: id.into(),
            machine: machine.into(),
            project: project.into(),
            hypotheses,
            goal,
            hash,
        }
    }

    pub fn hypothesis_formulas(&self) -> Vec<Formula> {
        self.hypotheses.iter().map(|h| h.formula.clone()).collect()
    }

    /// Text form: a header, one `hyp <origin> <label>: <formula>` line per
    /// hypothesis and a final `goal: <formula>` line.
    pub fn to_text(&self) -> String {
        let mut out = format!("po {}\nmachine {}\nproject {}\n", self.id, self.machine, self.project);
        for h in &self.hypotheses {
            out.push_str(&format!("hyp {} {}: {}\n", h.origin, h.label, h.formula));
        }
        out.push_str(&format!("goal: {}\n", self.goal));
        out
    }

    pub fn from_text(text: &str) -> Result<ProofObligation, PoFileError> {
        let mut id = None;
        let mut machine = None;
        let mut project = None;
        let mut hypotheses = Vec::new();
        let mut goal = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let err = |message: String| PoFileError::Syntax { line: line_no, message };
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let formula = |s: &str| parse_with(s.trim(), ParseOptions::PRIMED).map_err(|e| err(e.to_string()));
            let (head, rest) = line.split_once(' ').unwrap_or((line, ""));
            match head {
                "po" => id = Some(rest.trim().to_string()),
                "machine" => machine = Some(rest.trim().to_string()),
                "project" => project = Some(rest.trim().to_string()),
                "hyp" => {
                    let (tag, body) = rest
                        .split_once(':')
                        .ok_or_else(|| err("expected `hyp <origin> <label>: <formula>`".into()))?;
                    let mut tag = tag.split_whitespace();
                    let (Some(origin), Some(label), None) = (tag.next(), tag.next(), tag.next()) else {
                        return Err(err("expected `hyp <origin> <label>: <formula>`".into()));
                    };
                    let origin = Origin::parse(origin).ok_or_else(|| err(format!("unknown origin `{origin}`")))?;
                    hypotheses.push(Hypothesis::new(origin, label, formula(body)?));
                }
                "goal:" => goal = Some(formula(rest)?),
                _ => return Err(err(format!("unexpected line `{line}`"))),
            }
        }
        let missing = |what: &str| PoFileError::Syntax {
            line: 0,
            message: format!("missing `{what}`"),
        };
        Ok(ProofObligation::new(
            id.ok_or_else(|| missing("po"))?,
            machine.ok_or_else(|| missing("machine"))?,
            project.ok_or_else(|| missing("project"))?,
            hypotheses,
            goal.ok_or_else(|| missing("goal"))?,
        ))
    }

    /// Writes `<dir>/<id>.po`, creating directories for the `/`-separated id.
    pub fn write_to_dir(&self, dir: &Path) -> std::io::Result<PathBuf> {
        let path = dir.join(format!("{}.po", self.id));
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, self.to_text())?;
        Ok(path)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PoFileError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
}

/// FNV-1a over the hypothesis formulas in order, then the goal.
pub fn sequent_hash(hypotheses: &[Hypothesis], goal: &Formula) -> u64 {
    let mut h = Fnv1a::new();
    for hyp in hypotheses {
        h.write_formula(&hyp.formula);
    }
    h.write(b"|-");
    h.write_formula(goal);
    h.finish()
}

/// One INV obligation per (event, invariant), sorted by id.
pub fn generate_inv_pos(m: &MachineModel) -> Vec<ProofObligation> {
    let variables: BTreeSet<String> = m.variables.iter().cloned().collect();
    let mut pos = Vec::new();
    for event in &m.events {
        let mut hyps: Vec<Hypothesis> = m
            .axioms
            .iter()
            .map(|(l, f)| Hypothesis::new(Origin::Axiom, l, f.clone()))
            .collect();
        hyps.extend(
            m.invariants
                .iter()
                .map(|(l, f)| Hypothesis::new(Origin::Invariant, l, f.clone())),
        );
        hyps.extend(
            event
                .guards
                .iter()
                .map(|(l, f)| Hypothesis::new(Origin::Guard, l, f.clone())),
        );
        let mut assigned = BTreeSet::new();
        for (label, (var, kind, f)) in &event.actions {
            assigned.insert(var.as_str());
            let ba = match kind {
                ActionKind::Becomes => Formula::binary(Kind::Equal, Formula::ident(format!("{var}'")), f.clone()),
                ActionKind::BecomesSuchThat => f.clone(),
            };
            hyps.push(Hypothesis::new(Origin::BeforeAfter, label, ba));
        }
        for v in &m.variables {
            if !assigned.contains(v.as_str()) {
                let eq = Formula::binary(Kind::Equal, Formula::ident(format!("{v}'")), Formula::ident(v));
                hyps.push(Hypothesis::new(Origin::Frame, format!("frame_{v}"), eq));
            }
        }
        for (label, inv) in &m.invariants {
            pos.push(ProofObligation::new(
                format!("{}/{}/{}/INV", m.name, event.name, label),
                &m.name,
                &m.project,
                hyps.clone(),
                prime(inv, &variables),
            ));
        }
    }
    pos.sort_by(|a, b| a.id.cmp(&b.id));
    pos
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("selected hypothesis {index} out of range ({len} hypotheses)")]
pub struct IndexOutOfRange {
    pub index: usize,
    pub len: usize,
}

/// Keeps the selected hypotheses in their original order and appends the
/// lemma instances. Lemma-source candidates in `selection` are ignored; the
/// caller passes the instances it wants injected.
pub fn assemble_sequent(
    po: &ProofObligation,
    selection: &[RankedCandidate],
    lemmas: &[(String, Formula)],
) -> Result<ProofObligation, IndexOutOfRange> {
    let len = po.hypotheses.len();
    let mut keep = BTreeSet::new();
    for c in selection.iter().filter(|c| c.source == Source::Hypothesis) {
        if c.index >= len {
            return Err(IndexOutOfRange { index: c.index, len });
        }
        keep.insert(c.index);
    }
    let mut hyps: Vec<Hypothesis> = keep.into_iter().map(|i| po.hypotheses[i].clone()).collect();
    hyps.extend(
        lemmas
            .iter()
            .map(|(name, f)| Hypothesis::new(Origin::Lemma, name, f.clone())),
    );
    Ok(ProofObligation::new(
        &po.id,
        &po.machine,
        &po.project,
        hyps,
        po.goal.clone(),
    ))
}

/// Hypotheses of the form `v' = E` with `v'` not free in `E`, first per variable.
pub fn post_state_definitions(hypotheses: &[Formula]) -> Vec<(String, Formula)> {
    let mut out: Vec<(String, Formula)> = Vec::new();
    for h in hypotheses.iter().flat_map(|h| h.conjuncts()) {
        if h.kind() != Kind::Equal {
            continue;
        }
        let [lhs, rhs] = h.children() else { continue };
        let Some(name) = lhs.name().filter(|n| lhs.kind() == Kind::Ident && n.ends_with('\'')) else {
            continue;
        };
        if out.iter().any(|(n, _)| n == name) || crate::formula::free_identifiers(rhs).contains(name) {
            continue;
        }
        out.push((name.to_string(), rhs.clone()));
    }
    out
}

/// The goal with every post-state definition unfolded at once, if that changes it.
pub fn rewrite_post_state(goal: &Formula, hypotheses: &[Formula]) -> Option<Formula> {
    let defs: Binding = post_state_definitions(hypotheses).into_iter().collect();
    if defs.is_empty() {
        return None;
    }
    substitute(goal, &defs).ok().filter(|g| g != goal)
}
