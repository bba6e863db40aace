//! Formula AST for a subset of the Event-B mathematical language.
//!
//! A [`Formula`] is an immutable tree of operator nodes. Predicates and
//! expressions share one node type; the [`Kind`] of a node determines its
//! sort, its arity and the sort of its children. The parser only produces
//! well-formed trees, and [`Formula::validate`] checks hand-built ones.

mod hash;
mod lexer;
mod ops;
mod parser;
mod printer;

use std::fmt;

pub use hash::{formula_hash, Fnv1a};
pub use ops::{
    alpha_normalize, free_identifiers, metavariables, prime, substitute, substitute_metavars, Binding, CaptureError,
};
pub use parser::{parse_formula, parse_with, ParseError, ParseOptions};
pub use printer::print_formula;

/// Reserved words that cannot be used as identifiers.
pub fn is_keyword(word: &str) -> bool {
    lexer::KEYWORDS.contains(&word)
}

/// Byte range of a node in its source text, end exclusive.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct SourceSpan {
    pub start: usize,
    pub end: usize,
}

impl SourceSpan {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        SourceSpan { start, end }
    }

    pub fn join(self, other: SourceSpan) -> SourceSpan {
        SourceSpan::new(self.start.min(other.start), self.end.max(other.end))
    }

    pub fn shift(self, offset: usize) -> SourceSpan {
        SourceSpan::new(self.start + offset, self.end + offset)
    }
}

/// Whether a node denotes a truth value or a set-theoretic value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sort {
    Predicate,
    Expression,
}

/// Number of children a node kind takes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Arity {
    Exactly(usize),
    AtLeast(usize),
}

impl Arity {
    pub fn accepts(self, n: usize) -> bool {
        match self {
            Arity::Exactly(k) => n == k,
            Arity::AtLeast(k) => n >= k,
        }
    }
}

macro_rules! kinds {
    ($($kind:ident => $name:literal, $symbol:literal, $sort:ident, $arity:expr, $child:ident;)*) => {
        /// Operator kinds of the formula language (closed set).
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum Kind {
            $($kind,)*
        }

        impl Kind {
            pub const ALL: &'static [Kind] = &[$(Kind::$kind,)*];

            /// Stable name, used by translation maps and the hash serialization.
            pub fn name(self) -> &'static str {
                match self { $(Kind::$kind => $name,)* }
            }

            /// Concrete-syntax symbol, used as the shingle label.
            pub fn symbol(self) -> &'static str {
                match self { $(Kind::$kind => $symbol,)* }
            }

            pub fn sort(self) -> Sort {
                match self { $(Kind::$kind => Sort::$sort,)* }
            }

            pub fn arity(self) -> Arity {
                match self { $(Kind::$kind => $arity,)* }
            }

            /// Sort required of every child.
            pub fn child_sort(self) -> Sort {
                match self { $(Kind::$kind => Sort::$child,)* }
            }

            pub fn from_name(name: &str) -> Option<Kind> {
                match name { $($name => Some(Kind::$kind),)* _ => None }
            }
        }
    };
}

use Arity::{AtLeast, Exactly};

kinds! {
    True => "True", "true", Predicate, Exactly(0), Predicate;
    False => "False", "false", Predicate, Exactly(0), Predicate;
    Not => "Not", "not", Predicate, Exactly(1), Predicate;
    And => "And", "&", Predicate, Exactly(2), Predicate;
    Or => "Or", "or", Predicate, Exactly(2), Predicate;
    Implies => "Implies", "=>", Predicate, Exactly(2), Predicate;
    Iff => "Iff", "<=>", Predicate, Exactly(2), Predicate;
    Forall => "Forall", "!", Predicate, Exactly(1), Predicate;
    Exists => "Exists", "#", Predicate, Exactly(1), Predicate;
    Equal => "Equal", "=", Predicate, Exactly(2), Expression;
    NotEqual => "NotEqual", "/=", Predicate, Exactly(2), Expression;
    In => "In", ":", Predicate, Exactly(2), Expression;
    SubsetEq => "SubsetEq", "<:", Predicate, Exactly(2), Expression;
    Lt => "Lt", "<", Predicate, Exactly(2), Expression;
    Le => "Le", "<=", Predicate, Exactly(2), Expression;
    Gt => "Gt", ">", Predicate, Exactly(2), Expression;
    Ge => "Ge", ">=", Predicate, Exactly(2), Expression;
    Ident => "Ident", "id", Expression, Exactly(0), Expression;
    IntLit => "IntLit", "int", Expression, Exactly(0), Expression;
    Add => "Add", "+", Expression, Exactly(2), Expression;
    Sub => "Sub", "-", Expression, Exactly(2), Expression;
    Mul => "Mul", "*", Expression, Exactly(2), Expression;
    Div => "Div", "/", Expression, Exactly(2), Expression;
    Mod => "Mod", "mod", Expression, Exactly(2), Expression;
    Union => "Union", "\\/", Expression, Exactly(2), Expression;
    Inter => "Inter", "/\\", Expression, Exactly(2), Expression;
    SetMinus => "SetMinus", "\\", Expression, Exactly(2), Expression;
    CartProd => "CartProd", "**", Expression, Exactly(2), Expression;
    Pow => "Pow", "POW", Expression, Exactly(1), Expression;
    Maplet => "Maplet", "|->", Expression, Exactly(2), Expression;
    SetExtension => "SetExtension", "{}", Expression, AtLeast(1), Expression;
    Dom => "Dom", "dom", Expression, Exactly(1), Expression;
    Ran => "Ran", "ran", Expression, Exactly(1), Expression;
    Image => "Image", "[]", Expression, Exactly(2), Expression;
    Override => "Override", "<+", Expression, Exactly(2), Expression;
    TotalFun => "TotalFun", "-->", Expression, Exactly(2), Expression;
    PartialFun => "PartialFun", "+->", Expression, Exactly(2), Expression;
    Relation => "Relation", "<->", Expression, Exactly(2), Expression;
    FunApp => "FunApp", "()", Expression, Exactly(2), Expression;
    Nat => "Nat", "NAT", Expression, Exactly(0), Expression;
    Int => "Int", "INT", Expression, Exactly(0), Expression;
    MetaVar => "MetaVar", "?", Expression, Exactly(0), Expression;
}

impl Kind {
    pub fn is_quantifier(self) -> bool {
        matches!(self, Kind::Forall | Kind::Exists)
    }

    /// Leaves that carry no structural information: identifiers, literals,
    /// the number sets and pattern holes.
    pub fn is_atom_leaf(self) -> bool {
        matches!(self, Kind::Ident | Kind::IntLit | Kind::Nat | Kind::Int | Kind::MetaVar)
    }

    pub fn is_set_operator(self) -> bool {
        matches!(
            self,
            Kind::Union
                | Kind::Inter
                | Kind::SetMinus
                | Kind::CartProd
                | Kind::Override
                | Kind::TotalFun
                | Kind::PartialFun
                | Kind::Relation
        )
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            Kind::Equal | Kind::NotEqual | Kind::In | Kind::SubsetEq | Kind::Lt | Kind::Le | Kind::Gt | Kind::Ge
        )
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Node payload: identifier name, literal value or bound-variable list.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Payload {
    None,
    Name(String),
    Int(i64),
    Bound(Vec<String>),
}

/// Malformed node: wrong arity, wrong payload or a sort violation.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum StructureError {
    #[error("{kind:?} takes {expected:?} children, got {found}")]
    Arity { kind: Kind, expected: Arity, found: usize },
    #[error("{kind:?} has an invalid payload")]
    Payload { kind: Kind },
    #[error("{kind:?} expects {expected:?} operands, found {found:?}")]
    Sort { kind: Kind, expected: Sort, found: Kind },
}

/// A predicate or expression tree. Equality and hashing ignore spans.
#[derive(Clone, Debug)]
pub struct Formula {
    kind: Kind,
    payload: Payload,
    children: Vec<Formula>,
    span: SourceSpan,
}

impl PartialEq for Formula {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.payload == other.payload && self.children == other.children
    }
}

impl Eq for Formula {}

impl std::hash::Hash for Formula {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.kind.hash(state);
        self.payload.hash(state);
        self.children.hash(state);
    }
}

impl Formula {
    /// Checked constructor for a single node; children are assumed valid.
    pub fn new(kind: Kind, payload: Payload, children: Vec<Formula>) -> Result<Formula, StructureError> {
        let f = Formula {
            kind,
            payload,
            children,
            span: SourceSpan::default(),
        };
        f.check_node()?;
        Ok(f)
    }

    pub(crate) fn raw(kind: Kind, payload: Payload, children: Vec<Formula>, span: SourceSpan) -> Formula {
        Formula {
            kind,
            payload,
            children,
            span,
        }
    }

    pub fn ident(name: impl Into<String>) -> Formula {
        Formula::raw(
            Kind::Ident,
            Payload::Name(name.into()),
            Vec::new(),
            SourceSpan::default(),
        )
    }

    pub fn meta(name: impl Into<String>) -> Formula {
        Formula::raw(
            Kind::MetaVar,
            Payload::Name(name.into()),
            Vec::new(),
            SourceSpan::default(),
        )
    }

    pub fn int(value: i64) -> Formula {
        Formula::raw(Kind::IntLit, Payload::Int(value), Vec::new(), SourceSpan::default())
    }

    /// Nullary constant: `True`, `False`, `Nat` or `Int`.
    pub fn constant(kind: Kind) -> Formula {
        assert_eq!(kind.arity(), Arity::Exactly(0), "{kind:?} is not a constant");
        assert!(!matches!(kind, Kind::Ident | Kind::IntLit | Kind::MetaVar));
        Formula::raw(kind, Payload::None, Vec::new(), SourceSpan::default())
    }

    pub fn unary(kind: Kind, operand: Formula) -> Formula {
        assert_eq!(kind.arity(), Arity::Exactly(1), "{kind:?} is not unary");
        assert!(!kind.is_quantifier(), "use Formula::quantifier");
        Formula::raw(kind, Payload::None, vec![operand], SourceSpan::default())
    }

    pub fn binary(kind: Kind, left: Formula, right: Formula) -> Formula {
        assert_eq!(kind.arity(), Arity::Exactly(2), "{kind:?} is not binary");
        Formula::raw(kind, Payload::None, vec![left, right], SourceSpan::default())
    }

    pub fn quantifier(kind: Kind, vars: Vec<String>, body: Formula) -> Formula {
        assert!(kind.is_quantifier(), "{kind:?} is not a quantifier");
        assert!(!vars.is_empty(), "empty bound list");
        Formula::raw(kind, Payload::Bound(vars), vec![body], SourceSpan::default())
    }

    pub fn set_extension(elements: Vec<Formula>) -> Formula {
        assert!(!elements.is_empty(), "empty set extension");
        Formula::raw(Kind::SetExtension, Payload::None, elements, SourceSpan::default())
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    pub fn payload(&self) -> &Payload {
        &self.payload
    }

    pub fn children(&self) -> &[Formula] {
        &self.children
    }

    pub fn span(&self) -> SourceSpan {
        self.span
    }

    pub fn with_span(mut self, span: SourceSpan) -> Formula {
        self.span = span;
        self
    }

    pub fn sort(&self) -> Sort {
        self.kind.sort()
    }

    /// Name of an `Ident` or `MetaVar` node.
    pub fn name(&self) -> Option<&str> {
        match (&self.kind, &self.payload) {
            (Kind::Ident | Kind::MetaVar, Payload::Name(n)) => Some(n),
            _ => None,
        }
    }

    pub fn int_value(&self) -> Option<i64> {
        match self.payload {
            Payload::Int(v) => Some(v),
            _ => None,
        }
    }

    /// Bound variables of a quantifier node.
    pub fn bound_vars(&self) -> &[String] {
        match &self.payload {
            Payload::Bound(vs) => vs,
            _ => &[],
        }
    }

    pub fn is_ident(&self, name: &str) -> bool {
        self.kind == Kind::Ident && self.name() == Some(name)
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        1 + self.children.iter().map(Formula::size).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self.children.iter().map(Formula::depth).max().unwrap_or(0)
    }

    /// Pre-order iterator over all subterms, including `self`.
    pub fn subterms(&self) -> impl Iterator<Item = &Formula> {
        let mut stack = vec![self];
        std::iter::from_fn(move || {
            let next = stack.pop()?;
            stack.extend(next.children.iter().rev());
            Some(next)
        })
    }

    pub fn contains_metavar(&self) -> bool {
        self.subterms().any(|t| t.kind == Kind::MetaVar)
    }

    /// Splits nested conjunctions into their conjuncts, left to right.
    pub fn conjuncts(&self) -> Vec<&Formula> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(f) = stack.pop() {
            if f.kind == Kind::And {
                stack.push(&f.children[1]);
                stack.push(&f.children[0]);
            } else {
                out.push(f);
            }
        }
        out
    }

    fn check_node(&self) -> Result<(), StructureError> {
        let kind = self.kind;
        if !kind.arity().accepts(self.children.len()) {
            return Err(StructureError::Arity {
                kind,
                expected: kind.arity(),
                found: self.children.len(),
            });
        }
        let payload_ok = match (&self.payload, kind) {
            (Payload::Name(n), Kind::Ident | Kind::MetaVar) => !n.is_empty(),
            (Payload::Int(_), Kind::IntLit) => true,
            (Payload::Bound(vs), Kind::Forall | Kind::Exists) => !vs.is_empty() && vs.iter().all(|v| !v.is_empty()),
            (Payload::None, k) => !matches!(
                k,
                Kind::Ident | Kind::MetaVar | Kind::IntLit | Kind::Forall | Kind::Exists
            ),
            _ => false,
        };
        if !payload_ok {
            return Err(StructureError::Payload { kind });
        }
        for child in &self.children {
            if child.sort() != kind.child_sort() {
                return Err(StructureError::Sort {
                    kind,
                    expected: kind.child_sort(),
                    found: child.kind,
                });
            }
        }
        Ok(())
    }

    /// Recursively checks arity, payloads and predicate/expression stratification.
    pub fn validate(&self) -> Result<(), StructureError> {
        for node in self.subterms() {
            node.check_node()?;
        }
        Ok(())
    }

    /// Rebuilds the node with new children, keeping kind, payload and span.
    pub(crate) fn with_children(&self, children: Vec<Formula>) -> Formula {
        Formula::raw(self.kind, self.payload.clone(), children, self.span)
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_formula(self))
    }
}

impl std::str::FromStr for Formula {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_formula(s)
    }
}
