//! Line-oriented machine file parser.
//!
//! ```text
//! machine lib0 project demo
//! sets BOOKS
//! constants max
//! axioms
//!   @axm1 max : NAT
//! variables library
//! invariants
//!   @inv1 library : BOOKS --> NAT
//! events
//!   event lend any b n where
//!     @grd1 b : BOOKS
//!   then
//!     @act1 library := library <+ {b |-> n}
//!   end
//! ```
//!
//! `//` starts a comment. Section keywords may carry their first items on
//! the same line. Events use `any`, `where`/`when`, `then`/`begin` and `end`.

use std::collections::BTreeSet;
use std::fmt;

use crate::formula::{free_identifiers, parse_with, Formula, ParseOptions};

use super::{ActionKind, Event, MachineModel};

/// 1-based line and column (in bytes) within the machine file.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FilePos {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for FilePos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("{pos}: {message}")]
    Syntax { pos: FilePos, message: String },
    #[error("{pos}: duplicate {what} `{name}`")]
    DuplicateName {
        pos: FilePos,
        what: &'static str,
        name: String,
    },
    #[error("{pos}: undeclared identifier `{name}` in {context}")]
    UndeclaredIdentifier {
        pos: FilePos,
        name: String,
        context: String,
    },
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    None,
    Sets,
    Constants,
    Axioms,
    Variables,
    Invariants,
    Events,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum EventPart {
    Header,
    Guards,
    Actions,
}

struct Labeled<T> {
    label: String,
    value: T,
    pos: FilePos,
}

struct EventDraft {
    name: String,
    pos: FilePos,
    params: Vec<(String, FilePos)>,
    guards: Vec<Labeled<Formula>>,
    actions: Vec<Labeled<(String, ActionKind, Formula)>>,
    part: EventPart,
}

/// A word of a line with its byte column.
struct Words<'a> {
    line: &'a str,
    rest: usize,
}

impl<'a> Words<'a> {
    fn new(line: &'a str) -> Words<'a> {
        Words { line, rest: 0 }
    }

    fn peek(&self) -> Option<(usize, &'a str)> {
        let tail = &self.line[self.rest..];
        let start = self.rest + (tail.len() - tail.trim_start().len());
        let word = self.line[start..].split_whitespace().next()?;
        Some((start, word))
    }

    fn next(&mut self) -> Option<(usize, &'a str)> {
        let (start, word) = self.peek()?;
        self.rest = start + word.len();
        Some((start, word))
    }

    /// Remaining text and its column, if non-blank.
    fn remainder(&self) -> Option<(usize, &'a str)> {
        let tail = &self.line[self.rest..];
        let trimmed = tail.trim();
        (!trimmed.is_empty()).then(|| (self.rest + (tail.len() - tail.trim_start().len()), trimmed))
    }
}

const SECTION_WORDS: &[&str] = &["sets", "constants", "axioms", "variables", "invariants", "events"];

const EVENT_WORDS: &[&str] = &["event", "any", "where", "when", "then", "begin", "end"];

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

struct Parser {
    line_no: usize,
    model: MachineModel,
    has_header: bool,
    section: Section,
    event: Option<EventDraft>,
    events: Vec<EventDraft>,
    names: Vec<(String, FilePos, &'static str)>,
    axioms: Vec<Labeled<Formula>>,
    invariants: Vec<Labeled<Formula>>,
}

impl Parser {
    fn pos(&self, column: usize) -> FilePos {
        FilePos {
            line: self.line_no,
            column: column + 1,
        }
    }

    fn syntax(&self, column: usize, message: impl Into<String>) -> ModelError {
        ModelError::Syntax {
            pos: self.pos(column),
            message: message.into(),
        }
    }

    fn formula(&self, column: usize, text: &str, options: ParseOptions) -> Result<Formula, ModelError> {
        parse_with(text, options).map_err(|e| ModelError::Syntax {
            pos: self.pos(column + e.span.start),
            message: e.to_string(),
        })
    }

    fn identifier(&self, column: usize, word: &str) -> Result<String, ModelError> {
        if is_identifier(word) && !crate::formula::is_keyword(word) {
            Ok(word.to_string())
        } else {
            Err(self.syntax(column, format!("expected an identifier, found `{word}`")))
        }
    }

    /// Splits `@label text` into the label and the text with its column.
    fn labeled<'a>(&self, column: usize, text: &'a str) -> Result<(String, usize, &'a str), ModelError> {
        let Some(body) = text.strip_prefix('@') else {
            return Err(self.syntax(column, format!("expected `@label`, found `{text}`")));
        };
        let label_len = body.find(char::is_whitespace).unwrap_or(body.len());
        let label = &body[..label_len];
        if label.is_empty() || !label.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(self.syntax(column, format!("invalid label `@{label}`")));
        }
        let rest = &body[label_len..];
        let trimmed = rest.trim_start();
        let item_col = column + 1 + label_len + (rest.len() - trimmed.len());
        if trimmed.trim().is_empty() {
            return Err(self.syntax(column, format!("label `@{label}` has no content")));
        }
        Ok((label.to_string(), item_col, trimmed.trim_end()))
    }

    fn line(&mut self, raw: &str) -> Result<(), ModelError> {
        let line = match raw.find("//") {
            Some(i) => &raw[..i],
            None => raw,
        };
        let mut words = Words::new(line);
        let Some((col, first)) = words.peek() else {
            return Ok(());
        };

        if !self.has_header {
            if first != "machine" {
                return Err(self.syntax(col, "expected `machine <name> [project <id>]`"));
            }
            words.next();
            let (c, name) = words
                .next()
                .ok_or_else(|| self.syntax(line.len(), "missing machine name"))?;
            self.model.name = self.identifier(c, name)?;
            self.model.project = self.model.name.clone();
            if let Some((c, w)) = words.next() {
                if w != "project" {
                    return Err(self.syntax(c, format!("expected `project`, found `{w}`")));
                }
                let (c, p) = words
                    .next()
                    .ok_or_else(|| self.syntax(line.len(), "missing project id"))?;
                self.model.project = self.identifier(c, p)?;
            }
            if let Some((c, w)) = words.next() {
                return Err(self.syntax(c, format!("unexpected `{w}` after machine header")));
            }
            self.has_header = true;
            return Ok(());
        }

        if SECTION_WORDS.contains(&first) {
            if let Some(ev) = &self.event {
                return Err(self.syntax(col, format!("event `{}` is missing `end`", ev.name)));
            }
            words.next();
            self.section = match first {
                "sets" => Section::Sets,
                "constants" => Section::Constants,
                "axioms" => Section::Axioms,
                "variables" => Section::Variables,
                "invariants" => Section::Invariants,
                _ => Section::Events,
            };
        }

        match self.section {
            Section::None => Err(self.syntax(col, format!("unexpected `{first}` before any section"))),
            Section::Sets | Section::Constants | Section::Variables => {
                let what = match self.section {
                    Section::Sets => "set",
                    Section::Constants => "constant",
                    _ => "variable",
                };
                while let Some((c, w)) = words.next() {
                    let name = self.identifier(c, w)?;
                    self.names.push((name, self.pos(c), what));
                }
                Ok(())
            }
            Section::Axioms | Section::Invariants => {
                let Some((c, text)) = words.remainder() else {
                    return Ok(());
                };
                let (label, fc, ftext) = self.labeled(c, text)?;
                let value = self.formula(fc, ftext, ParseOptions::default())?;
                let item = Labeled {
                    label,
                    value,
                    pos: self.pos(c),
                };
                if self.section == Section::Axioms {
                    self.axioms.push(item);
                } else {
                    self.invariants.push(item);
                }
                Ok(())
            }
            Section::Events => self.event_line(words),
        }
    }

    fn event_line(&mut self, mut words: Words<'_>) -> Result<(), ModelError> {
        while let Some((col, word)) = words.peek() {
            if !EVENT_WORDS.contains(&word) {
                let Some(ev) = &self.event else {
                    return Err(self.syntax(col, format!("expected `event`, found `{word}`")));
                };
                if ev.part == EventPart::Header {
                    // Parameters follow `any`; anything else needs a keyword first.
                    return Err(self.syntax(col, format!("unexpected `{word}` in event header")));
                }
                let (_, text) = words.remainder().expect("peeked a word");
                return self.event_item(col, text);
            }
            words.next();
            match word {
                "event" => {
                    if let Some(ev) = &self.event {
                        return Err(self.syntax(col, format!("event `{}` is missing `end`", ev.name)));
                    }
                    let (c, name) = words.next().ok_or_else(|| self.syntax(col, "missing event name"))?;
                    let name = self.identifier(c, name)?;
                    self.event = Some(EventDraft {
                        name,
                        pos: self.pos(c),
                        params: Vec::new(),
                        guards: Vec::new(),
                        actions: Vec::new(),
                        part: EventPart::Header,
                    });
                }
                "any" => {
                    let in_header =
                        matches!(&self.event, Some(ev) if ev.part == EventPart::Header && ev.params.is_empty());
                    if !in_header {
                        return Err(self.syntax(col, "`any` must follow the event name"));
                    }
                    while let Some((c, w)) = words.peek() {
                        if EVENT_WORDS.contains(&w) {
                            break;
                        }
                        words.next();
                        let name = self.identifier(c, w)?;
                        let pos = self.pos(c);
                        self.event.as_mut().expect("checked").params.push((name, pos));
                    }
                }
                "where" | "when" => match &mut self.event {
                    Some(ev) if ev.part == EventPart::Header => ev.part = EventPart::Guards,
                    _ => return Err(self.syntax(col, format!("misplaced `{word}`"))),
                },
                "then" | "begin" => match &mut self.event {
                    Some(ev) if ev.part != EventPart::Actions => ev.part = EventPart::Actions,
                    _ => return Err(self.syntax(col, format!("misplaced `{word}`"))),
                },
                _ => match self.event.take() {
                    Some(ev) => self.events.push(ev),
                    None => return Err(self.syntax(col, "`end` outside an event")),
                },
            }
        }
        Ok(())
    }

    fn event_item(&mut self, column: usize, text: &str) -> Result<(), ModelError> {
        let (label, fc, ftext) = self.labeled(column, text)?;
        let pos = self.pos(column);
        let part = self.event.as_ref().expect("inside event").part;
        if part == EventPart::Guards {
            let value = self.formula(fc, ftext, ParseOptions::default())?;
            self.event
                .as_mut()
                .expect("inside event")
                .guards
                .push(Labeled { label, value, pos });
            return Ok(());
        }
        let (op, kind) = match (ftext.find(":="), ftext.find(":|")) {
            (Some(i), _) => (i, ActionKind::Becomes),
            (None, Some(i)) => (i, ActionKind::BecomesSuchThat),
            (None, None) => return Err(self.syntax(fc, "expected `x := E` or `x :| P`")),
        };
        let var = ftext[..op].trim();
        let var = self.identifier(fc, var)?;
        let rhs = &ftext[op + 2..];
        let rhs_col = fc + op + 2 + (rhs.len() - rhs.trim_start().len());
        let options = match kind {
            ActionKind::Becomes => ParseOptions::default(),
            ActionKind::BecomesSuchThat => ParseOptions::PRIMED,
        };
        let value = self.formula(rhs_col, rhs.trim(), options)?;
        self.event.as_mut().expect("inside event").actions.push(Labeled {
            label,
            value: (var, kind, value),
            pos,
        });
        Ok(())
    }

    fn finish(mut self) -> Result<MachineModel, ModelError> {
        if !self.has_header {
            return Err(self.syntax(0, "empty machine file"));
        }
        if let Some(ev) = &self.event {
            return Err(ModelError::Syntax {
                pos: ev.pos,
                message: format!("event `{}` is missing `end`", ev.name),
            });
        }

        let mut declared = BTreeSet::new();
        for (name, pos, what) in &self.names {
            if !declared.insert(name.clone()) {
                return Err(ModelError::DuplicateName {
                    pos: *pos,
                    what,
                    name: name.clone(),
                });
            }
            match *what {
                "set" => self.model.sets.push(name.clone()),
                "constant" => self.model.constants.push(name.clone()),
                _ => self.model.variables.push(name.clone()),
            }
        }
        let context_ids: BTreeSet<String> = self.model.sets.iter().chain(&self.model.constants).cloned().collect();
        let variables: BTreeSet<String> = self.model.variables.iter().cloned().collect();

        let mut labels = BTreeSet::new();
        for (items, what) in [(&self.axioms, "axiom"), (&self.invariants, "invariant")] {
            let scope: BTreeSet<String> = if what == "axiom" {
                context_ids.clone()
            } else {
                declared.clone()
            };
            for item in items {
                if !labels.insert(item.label.clone()) {
                    return Err(ModelError::DuplicateName {
                        pos: item.pos,
                        what: "label",
                        name: item.label.clone(),
                    });
                }
                check_declared(&item.value, &scope, item.pos, || format!("{what} {}", item.label))?;
            }
        }
        self.model.axioms = self.axioms.into_iter().map(|i| (i.label, i.value)).collect();
        self.model.invariants = self.invariants.into_iter().map(|i| (i.label, i.value)).collect();

        let mut event_names = BTreeSet::new();
        for ev in self.events {
            if !event_names.insert(ev.name.clone()) {
                return Err(ModelError::DuplicateName {
                    pos: ev.pos,
                    what: "event",
                    name: ev.name,
                });
            }
            let mut scope = declared.clone();
            for (p, pos) in &ev.params {
                if !scope.insert(p.clone()) {
                    return Err(ModelError::DuplicateName {
                        pos: *pos,
                        what: "parameter",
                        name: p.clone(),
                    });
                }
            }
            let mut event_labels = BTreeSet::new();
            for g in &ev.guards {
                if !event_labels.insert(g.label.clone()) {
                    return Err(ModelError::DuplicateName {
                        pos: g.pos,
                        what: "label",
                        name: g.label.clone(),
                    });
                }
                check_declared(&g.value, &scope, g.pos, || {
                    format!("guard {} of event {}", g.label, ev.name)
                })?;
            }
            let mut assigned = BTreeSet::new();
            for a in &ev.actions {
                let (var, kind, value) = &a.value;
                if !event_labels.insert(a.label.clone()) {
                    return Err(ModelError::DuplicateName {
                        pos: a.pos,
                        what: "label",
                        name: a.label.clone(),
                    });
                }
                let context = || format!("action {} of event {}", a.label, ev.name);
                if !variables.contains(var) {
                    return Err(ModelError::UndeclaredIdentifier {
                        pos: a.pos,
                        name: var.clone(),
                        context: context(),
                    });
                }
                if !assigned.insert(var.clone()) {
                    return Err(ModelError::DuplicateName {
                        pos: a.pos,
                        what: "assignment to",
                        name: var.clone(),
                    });
                }
                let mut action_scope = scope.clone();
                if *kind == ActionKind::BecomesSuchThat {
                    action_scope.insert(format!("{var}'"));
                }
                check_declared(value, &action_scope, a.pos, context)?;
            }
            self.model.events.push(Event {
                name: ev.name,
                params: ev.params.into_iter().map(|(p, _)| p).collect(),
                guards: ev.guards.into_iter().map(|g| (g.label, g.value)).collect(),
                actions: ev.actions.into_iter().map(|a| (a.label, a.value)).collect(),
            });
        }
        Ok(self.model)
    }
}

fn check_declared(
    f: &Formula,
    scope: &BTreeSet<String>,
    pos: FilePos,
    context: impl Fn() -> String,
) -> Result<(), ModelError> {
    match free_identifiers(f).into_iter().find(|id| !scope.contains(id)) {
        Some(name) => Err(ModelError::UndeclaredIdentifier {
            pos,
            name,
            context: context(),
        }),
        None => Ok(()),
    }
}

pub fn parse_machine(text: &str) -> Result<MachineModel, ModelError> {
    let mut parser = Parser {
        line_no: 0,
        model: MachineModel::default(),
        has_header: false,
        section: Section::None,
        event: None,
        events: Vec::new(),
        names: Vec::new(),
        axioms: Vec::new(),
        invariants: Vec::new(),
    };
    for (i, line) in text.lines().enumerate() {
        parser.line_no = i + 1;
        parser.line(line)?;
    }
    parser.finish()
}
