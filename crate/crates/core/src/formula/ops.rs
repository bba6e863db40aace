use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::{Formula, Kind, Payload};

/// Substitution of identifiers or metavariables by formulas.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Binding(BTreeMap<String, Formula>);

impl Binding {
    pub fn new() -> Binding {
        Binding::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Formula) -> Option<Formula> {
        self.0.insert(name.into(), value)
    }

    pub fn get(&self, name: &str) -> Option<&Formula> {
        self.0.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Formula)> {
        self.0.iter()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    /// Keeps only the entries whose name satisfies `keep`.
    pub fn restricted_to(&self, keep: impl Fn(&str) -> bool) -> Binding {
        Binding(
            self.0
                .iter()
                .filter(|(k, _)| keep(k))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        )
    }
}

impl<K: Into<String>> FromIterator<(K, Formula)> for Binding {
    fn from_iter<I: IntoIterator<Item = (K, Formula)>>(iter: I) -> Self {
        Binding(iter.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }
}

impl fmt::Display for Binding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k} |-> {v}")?;
        }
        f.write_str("}")
    }
}

/// A replacement would place a free identifier under a binder of the same name.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("substituting for `{identifier}` would capture `{binder}`")]
pub struct CaptureError {
    pub binder: String,
    pub identifier: String,
}

/// Identifiers with at least one occurrence not bound by an enclosing quantifier.
pub fn free_identifiers(f: &Formula) -> BTreeSet<String> {
    fn go(f: &Formula, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match f.kind() {
            Kind::Ident => {
                let name = f.name().expect("identifier payload");
                if !bound.iter().any(|b| b == name) {
                    out.insert(name.to_string());
                }
            }
            Kind::Forall | Kind::Exists => {
                let n = bound.len();
                bound.extend(f.bound_vars().iter().cloned());
                go(&f.children()[0], bound, out);
                bound.truncate(n);
            }
            _ => {
                for c in f.children() {
                    go(c, bound, out);
                }
            }
        }
    }
    let mut out = BTreeSet::new();
    go(f, &mut Vec::new(), &mut out);
    out
}

/// Names of all metavariables occurring in `f`.
pub fn metavariables(f: &Formula) -> BTreeSet<String> {
    f.subterms()
        .filter(|t| t.kind() == Kind::MetaVar)
        .filter_map(|t| t.name().map(str::to_string))
        .collect()
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Target {
    Ident,
    MetaVar,
}

fn substitute_target(f: &Formula, binding: &Binding, target: Target) -> Result<Formula, CaptureError> {
    // Free identifiers of each replacement, computed once.
    let free: BTreeMap<&str, BTreeSet<String>> =
        binding.iter().map(|(k, v)| (k.as_str(), free_identifiers(v))).collect();

    fn go(
        f: &Formula,
        binding: &Binding,
        free: &BTreeMap<&str, BTreeSet<String>>,
        target: Target,
        bound: &mut Vec<String>,
    ) -> Result<Formula, CaptureError> {
        let hit = match (f.kind(), target) {
            (Kind::Ident, Target::Ident) => {
                let name = f.name().expect("identifier payload");
                !bound.iter().any(|b| b == name) && binding.contains(name)
            }
            (Kind::MetaVar, Target::MetaVar) => binding.contains(f.name().expect("metavariable payload")),
            _ => false,
        };
        if hit {
            let name = f.name().expect("named node");
            if let Some(binder) = bound.iter().rev().find(|b| free[name].contains(*b)) {
                return Err(CaptureError {
                    binder: binder.clone(),
                    identifier: name.to_string(),
                });
            }
            return Ok(binding.get(name).expect("checked").clone());
        }
        if f.children().is_empty() {
            return Ok(f.clone());
        }
        let n = bound.len();
        if f.kind().is_quantifier() {
            bound.extend(f.bound_vars().iter().cloned());
        }
        let children = f
            .children()
            .iter()
            .map(|c| go(c, binding, free, target, bound))
            .collect::<Result<Vec<_>, _>>();
        bound.truncate(n);
        Ok(f.with_children(children?))
    }

    go(f, binding, &free, target, &mut Vec::new())
}

/// Replaces every free occurrence of a bound-in-`binding` identifier.
pub fn substitute(f: &Formula, binding: &Binding) -> Result<Formula, CaptureError> {
    substitute_target(f, binding, Target::Ident)
}

/// Replaces metavariables; quantifiers in `f` still guard against capture.
pub fn substitute_metavars(f: &Formula, binding: &Binding) -> Result<Formula, CaptureError> {
    substitute_target(f, binding, Target::MetaVar)
}

/// Renames free occurrences of `vars` to their post-state (primed) names.
pub fn prime(f: &Formula, vars: &BTreeSet<String>) -> Formula {
    fn go(f: &Formula, vars: &BTreeSet<String>, bound: &mut Vec<String>) -> Formula {
        match f.kind() {
            Kind::Ident => {
                let name = f.name().expect("identifier payload");
                if vars.contains(name) && !bound.iter().any(|b| b == name) {
                    Formula::ident(format!("{name}'")).with_span(f.span())
                } else {
                    f.clone()
                }
            }
            _ if f.children().is_empty() => f.clone(),
            _ => {
                let n = bound.len();
                bound.extend(f.bound_vars().iter().cloned());
                let children = f.children().iter().map(|c| go(c, vars, bound)).collect();
                bound.truncate(n);
                f.with_children(children)
            }
        }
    }
    if vars.is_empty() {
        return f.clone();
    }
    go(f, vars, &mut Vec::new())
}

/// Renames bound variables to canonical names by binding position, so that
/// alpha-equivalent formulas become structurally equal.
pub fn alpha_normalize(f: &Formula) -> Formula {
    fn go(f: &Formula, scope: &mut Vec<(String, String)>) -> Formula {
        match f.kind() {
            Kind::Ident => {
                let name = f.name().expect("identifier payload");
                match scope.iter().rev().find(|(old, _)| old == name) {
                    Some((_, new)) => Formula::ident(new.clone()).with_span(f.span()),
                    None => f.clone(),
                }
            }
            Kind::Forall | Kind::Exists => {
                let n = scope.len();
                let mut renamed = Vec::with_capacity(f.bound_vars().len());
                for v in f.bound_vars() {
                    // `%` cannot occur in parsed identifiers, so no clash with free names.
                    let fresh = format!("%{}", scope.len());
                    scope.push((v.clone(), fresh.clone()));
                    renamed.push(fresh);
                }
                let body = go(&f.children()[0], scope);
                scope.truncate(n);
                Formula::raw(f.kind(), Payload::Bound(renamed), vec![body], f.span())
            }
            _ if f.children().is_empty() => f.clone(),
            _ => f.with_children(f.children().iter().map(|c| go(c, scope)).collect()),
        }
    }
    go(f, &mut Vec::new())
}
