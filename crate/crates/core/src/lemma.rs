//! Schematic lemmas: storage, visibility scoping, trigger matching and
//! instantiation into first-order hypotheses.

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};

use crate::formula::{
    free_identifiers, metavariables, parse_with, substitute_metavars, Binding, CaptureError, Formula, Kind, ParseError,
    ParseOptions, Sort,
};
use crate::obligation::rewrite_post_state;
use crate::shingle::profile;
use crate::similarity::{weighted_score, ScoreParams};

/// Visibility class of a lemma.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scope {
    Global,
    Project(String),
    Machine(String),
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scope::Global => f.write_str("global"),
            Scope::Project(p) => write!(f, "project {p}"),
            Scope::Machine(m) => write!(f, "machine {m}"),
        }
    }
}

impl std::str::FromStr for Scope {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut words = s.split_whitespace();
        let scope = match (words.next(), words.next()) {
            (Some("global"), None) => Scope::Global,
            (Some("project"), Some(id)) => Scope::Project(id.to_string()),
            (Some("machine"), Some(id)) => Scope::Machine(id.to_string()),
            _ => return Err(format!("invalid scope `{s}`")),
        };
        if words.next().is_some() {
            return Err(format!("invalid scope `{s}`"));
        }
        Ok(scope)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LemmaError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("{field} of lemma: {source}")]
    Formula {
        field: &'static str,
        #[source]
        source: ParseError,
    },
    #[error("lemma `{lemma}`: parameter `{param}` does not occur in the trigger")]
    ParameterNotInTrigger { lemma: String, param: String },
    #[error("lemma `{lemma}`: statement uses undeclared metavariable `?{var}`")]
    UndeclaredMetavar { lemma: String, var: String },
    #[error("lemma `{lemma}`: statement must be a predicate")]
    NotAPredicate { lemma: String },
    #[error("duplicate lemma `{name}` in scope {scope}")]
    Duplicate { name: String, scope: Scope },
    #[error("{path}: {source}")]
    InFile {
        path: PathBuf,
        #[source]
        source: Box<LemmaError>,
    },
}

/// A reusable lemma over set parameters, written as a closed schematic predicate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SchematicLemma {
    pub name: String,
    pub scope: Scope,
    /// Set metavariables that instantiation must bind.
    pub params: Vec<String>,
    pub trigger: Formula,
    pub statement: Formula,
}

impl SchematicLemma {
    pub fn new(
        name: impl Into<String>,
        scope: Scope,
        params: Vec<String>,
        trigger: Formula,
        statement: Formula,
    ) -> Result<SchematicLemma, LemmaError> {
        let lemma = SchematicLemma {
            name: name.into(),
            scope,
            params,
            trigger,
            statement,
        };
        lemma.check()?;
        Ok(lemma)
    }

    fn check(&self) -> Result<(), LemmaError> {
        let in_trigger = metavariables(&self.trigger);
        if let Some(p) = self.params.iter().find(|p| !in_trigger.contains(*p)) {
            return Err(LemmaError::ParameterNotInTrigger {
                lemma: self.name.clone(),
                param: p.clone(),
            });
        }
        if let Some(v) = metavariables(&self.statement)
            .into_iter()
            .find(|v| !self.params.contains(v))
        {
            return Err(LemmaError::UndeclaredMetavar {
                lemma: self.name.clone(),
                var: v,
            });
        }
        if self.statement.sort() != Sort::Predicate {
            return Err(LemmaError::NotAPredicate {
                lemma: self.name.clone(),
            });
        }
        Ok(())
    }

    /// Parses the line-oriented lemma file format.
    pub fn parse(text: &str) -> Result<SchematicLemma, LemmaError> {
        let mut name = None;
        let mut scope = None;
        let mut params = None;
        let mut trigger = None;
        let mut statement = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let syntax = |message: String| LemmaError::Syntax { line: line_no, message };
            let (key, value) = line
                .split_once(':')
                .ok_or_else(|| syntax(format!("expected `key: value`, got `{line}`")))?;
            let value = value.trim();
            // Byte column of the value within the raw line, for formula error spans.
            let value_offset = value.as_ptr() as usize - raw.as_ptr() as usize;
            let formula = |field: &'static str| {
                parse_with(value, ParseOptions::PATTERN).map_err(|e| LemmaError::Formula {
                    field,
                    source: e.shift(value_offset),
                })
            };
            let slot_taken = match key.trim() {
                "name" => name.replace(value.to_string()).is_some(),
                "scope" => scope.replace(value.parse::<Scope>().map_err(syntax)?).is_some(),
                "params" => params
                    .replace(value.split_whitespace().map(str::to_string).collect::<Vec<_>>())
                    .is_some(),
                "trigger" => trigger.replace(formula("trigger")?).is_some(),
                "statement" => statement.replace(formula("statement")?).is_some(),
                other => return Err(syntax(format!("unknown key `{other}`"))),
            };
            if slot_taken {
                return Err(syntax(format!("duplicate key `{}`", key.trim())));
            }
        }
        let missing = |key: &str| LemmaError::Syntax {
            line: 0,
            message: format!("missing `{key}`"),
        };
        let name: String = name.ok_or_else(|| missing("name"))?;
        if name.is_empty() || name.contains(char::is_whitespace) {
            return Err(LemmaError::Syntax {
                line: 0,
                message: format!("invalid lemma name `{name}`"),
            });
        }
        SchematicLemma::new(
            name,
            scope.ok_or_else(|| missing("scope"))?,
            params.unwrap_or_default(),
            trigger.ok_or_else(|| missing("trigger"))?,
            statement.ok_or_else(|| missing("statement"))?,
        )
    }

    pub fn to_text(&self) -> String {
        format!(
            "name: {}\nscope: {}\nparams: {}\ntrigger: {}\nstatement: {}\n",
            self.name,
            self.scope,
            self.params.join(" "),
            self.trigger,
            self.statement
        )
    }
}

/// Lemmas indexed by visibility; names are unique per scope.
#[derive(Clone, Debug, Default)]
pub struct LemmaStore {
    lemmas: Vec<SchematicLemma>,
}

impl LemmaStore {
    pub fn new() -> LemmaStore {
        LemmaStore::default()
    }

    pub fn insert(&mut self, lemma: SchematicLemma) -> Result<(), LemmaError> {
        if self
            .lemmas
            .iter()
            .any(|l| l.name == lemma.name && l.scope == lemma.scope)
        {
            return Err(LemmaError::Duplicate {
                name: lemma.name,
                scope: lemma.scope,
            });
        }
        self.lemmas.push(lemma);
        Ok(())
    }

    /// Loads every `*.lemma` file of `dir`, in file-name order.
    pub fn load_dir(dir: &Path) -> Result<LemmaStore, LemmaError> {
        let io = |source| LemmaError::Io {
            path: dir.to_path_buf(),
            source,
        };
        let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(io)?
            .map(|e| e.map(|e| e.path()))
            .collect::<Result<_, _>>()
            .map_err(io)?;
        paths.retain(|p| p.extension().is_some_and(|e| e == "lemma"));
        paths.sort();
        let mut store = LemmaStore::new();
        for path in paths {
            let text = std::fs::read_to_string(&path).map_err(|source| LemmaError::Io {
                path: path.clone(),
                source,
            })?;
            let in_file = |e: LemmaError| LemmaError::InFile {
                path: path.clone(),
                source: Box::new(e),
            };
            let lemma = SchematicLemma::parse(&text).map_err(in_file)?;
            store.insert(lemma).map_err(in_file)?;
        }
        Ok(store)
    }

    pub fn lemmas(&self) -> &[SchematicLemma] {
        &self.lemmas
    }

    pub fn len(&self) -> usize {
        self.lemmas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lemmas.is_empty()
    }
}

/// Global lemmas, then the project's, then the machine's; each group by name.
pub fn lemmas_in_scope<'a>(store: &'a LemmaStore, machine: &str, project: &str) -> Vec<&'a SchematicLemma> {
    let rank = |l: &SchematicLemma| match &l.scope {
        Scope::Global => Some(0),
        Scope::Project(p) if p == project => Some(1),
        Scope::Machine(m) if m == machine => Some(2),
        _ => None,
    };
    let mut visible: Vec<(u8, &SchematicLemma)> = store.lemmas.iter().filter_map(|l| rank(l).map(|r| (r, l))).collect();
    visible.sort_by(|(ra, a), (rb, b)| ra.cmp(rb).then_with(|| a.name.cmp(&b.name)));
    visible.into_iter().map(|(_, l)| l).collect()
}

fn match_into(pattern: &Formula, target: &Formula, binding: &mut Binding) -> bool {
    if pattern.kind() == Kind::MetaVar {
        if target.sort() != Sort::Expression {
            return false;
        }
        let name = pattern.name().expect("metavariable payload");
        return match binding.get(name) {
            Some(bound) => bound == target,
            None => {
                binding.insert(name, target.clone());
                true
            }
        };
    }
    pattern.kind() == target.kind()
        && pattern.payload() == target.payload()
        && pattern.children().len() == target.children().len()
        && pattern
            .children()
            .iter()
            .zip(target.children())
            .all(|(p, t)| match_into(p, t, binding))
}

/// Syntactic first-order match of `pattern` against the whole of `target`.
pub fn match_at(pattern: &Formula, target: &Formula) -> Option<Binding> {
    let mut binding = Binding::new();
    match_into(pattern, target, &mut binding).then_some(binding)
}

/// All distinct bindings under which `trigger` equals a subterm of `target`,
/// in pre-order (top-down, left-to-right). Bindings that would carry a
/// variable out of its quantifier are skipped.
pub fn match_trigger(trigger: &Formula, target: &Formula) -> Vec<Binding> {
    fn scan(trigger: &Formula, t: &Formula, bound: &mut Vec<String>, out: &mut Vec<Binding>) {
        if let Some(b) = match_at(trigger, t) {
            let escapes = b
                .iter()
                .any(|(_, v)| free_identifiers(v).iter().any(|id| bound.contains(id)));
            if !escapes && !out.contains(&b) {
                out.push(b);
            }
        }
        let n = bound.len();
        bound.extend(t.bound_vars().iter().cloned());
        for c in t.children() {
            scan(trigger, c, bound, out);
        }
        bound.truncate(n);
    }
    let mut out = Vec::new();
    scan(trigger, target, &mut Vec::new(), &mut out);
    out
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum InstantiateError {
    #[error("binding lacks parameters {}", .0.join(", "))]
    IncompleteBinding(Vec<String>),
    #[error(transparent)]
    Capture(#[from] CaptureError),
}

/// Substitutes the lemma's parameters; other binding entries are ignored.
pub fn instantiate(lemma: &SchematicLemma, binding: &Binding) -> Result<Formula, InstantiateError> {
    let missing: Vec<String> = lemma.params.iter().filter(|p| !binding.contains(p)).cloned().collect();
    if !missing.is_empty() {
        return Err(InstantiateError::IncompleteBinding(missing));
    }
    let params = binding.restricted_to(|k| lemma.params.iter().any(|p| p == k));
    Ok(substitute_metavars(&lemma.statement, &params)?)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Suggestion {
    pub lemma: SchematicLemma,
    pub binding: Binding,
    pub instance: Formula,
    pub score: f64,
}

/// Matches each lemma's trigger against the goal, the goal with post-state
/// definitions unfolded, and every hypothesis; instantiates each binding and
/// ranks the distinct instances by similarity to the goal.
pub fn suggest_lemmas(
    goal: &Formula,
    hypotheses: &[Formula],
    lemmas: &[&SchematicLemma],
    params: &ScoreParams,
) -> Vec<Suggestion> {
    let mut targets = vec![goal.clone()];
    targets.extend(rewrite_post_state(goal, hypotheses));
    targets.extend(hypotheses.iter().cloned());

    let mut found: Vec<(SchematicLemma, Binding, Formula)> = Vec::new();
    let mut seen: HashSet<Formula> = HashSet::new();
    for lemma in lemmas {
        for target in &targets {
            for binding in match_trigger(&lemma.trigger, target) {
                let Ok(instance) = instantiate(lemma, &binding) else {
                    continue;
                };
                if seen.insert(instance.clone()) {
                    found.push(((*lemma).clone(), binding, instance));
                }
            }
        }
    }
    if found.is_empty() {
        return Vec::new();
    }

    let pool: Vec<&Formula> = hypotheses.iter().chain(found.iter().map(|(_, _, f)| f)).collect();
    let profiles: Vec<_> = pool.iter().map(|f| profile(f, params.n)).collect();
    let table = crate::shingle::build_weight_table(&profiles, params.tau);
    let goal_profile = profile(goal, params.n);
    let offset = hypotheses.len();
    let mut out: Vec<(usize, Suggestion)> = found
        .into_iter()
        .enumerate()
        .map(|(i, (lemma, binding, instance))| {
            let score = weighted_score(&goal_profile, &profiles[offset + i], &table, params);
            (
                i,
                Suggestion {
                    lemma,
                    binding,
                    instance,
                    score,
                },
            )
        })
        .collect();
    out.sort_by(|(ia, a), (ib, b)| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.lemma.name.cmp(&b.lemma.name))
            .then(ia.cmp(ib))
    });
    out.into_iter().map(|(_, s)| s).collect()
}
