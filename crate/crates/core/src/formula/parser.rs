use std::fmt;

use super::lexer::{tokenize, Tok, Token};
use super::{Formula, Kind, Payload, SourceSpan};

/// Malformed formula text.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub span: SourceSpan,
    pub message: String,
    /// What the parser would have accepted at `span`.
    pub expected: Vec<String>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}..{}", self.message, self.span.start, self.span.end)?;
        if !self.expected.is_empty() {
            write!(f, " (expected {})", self.expected.join(", "))?;
        }
        Ok(())
    }
}

impl ParseError {
    pub fn shift(mut self, offset: usize) -> ParseError {
        self.span = self.span.shift(offset);
        self
    }
}

/// Lexical extensions the default parser rejects.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ParseOptions {
    /// Accept identifiers ending in `'` (post-state variables).
    pub allow_primes: bool,
    /// Accept `?name` pattern holes.
    pub allow_metavars: bool,
}

impl ParseOptions {
    pub const PRIMED: ParseOptions = ParseOptions {
        allow_primes: true,
        allow_metavars: false,
    };
    pub const PATTERN: ParseOptions = ParseOptions {
        allow_primes: false,
        allow_metavars: true,
    };
}

/// Parses a predicate or an expression in the ASCII notation.
pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    parse_with(text, ParseOptions::default())
}

pub fn parse_with(text: &str, options: ParseOptions) -> Result<Formula, ParseError> {
    let tokens = tokenize(text).map_err(|e| ParseError {
        span: e.span,
        message: e.message,
        expected: Vec::new(),
    })?;
    let mut p = Parser {
        tokens,
        pos: 0,
        options,
    };
    let as_predicate = p.parse_predicate().and_then(|f| p.expect_eof().map(|_| f));
    match as_predicate {
        Ok(f) => Ok(f),
        Err(pred_err) => {
            p.pos = 0;
            let as_expr = p.parse_expression().and_then(|f| p.expect_eof().map(|_| f));
            as_expr.map_err(|expr_err| furthest(pred_err, expr_err))
        }
    }
}

fn furthest(a: ParseError, b: ParseError) -> ParseError {
    if b.span.start > a.span.start {
        b
    } else {
        a
    }
}

type PResult<T> = Result<T, ParseError>;

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    options: ParseOptions,
}

fn comparison_kind(sym: &str) -> Option<Kind> {
    Some(match sym {
        "=" => Kind::Equal,
        "/=" => Kind::NotEqual,
        ":" => Kind::In,
        "<:" => Kind::SubsetEq,
        "<" => Kind::Lt,
        "<=" => Kind::Le,
        ">" => Kind::Gt,
        ">=" => Kind::Ge,
        _ => return None,
    })
}

fn set_operator_kind(sym: &str) -> Option<Kind> {
    Some(match sym {
        "\\/" => Kind::Union,
        "/\\" => Kind::Inter,
        "\\" => Kind::SetMinus,
        "**" => Kind::CartProd,
        "<+" => Kind::Override,
        "-->" => Kind::TotalFun,
        "+->" => Kind::PartialFun,
        "<->" => Kind::Relation,
        _ => return None,
    })
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, ahead: usize) -> &Tok {
        let i = (self.pos + ahead).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn span(&self) -> SourceSpan {
        self.tokens[self.pos].span
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn at_sym(&self, sym: &str) -> bool {
        matches!(self.peek(), Tok::Sym(s) if *s == sym)
    }

    fn eat(&mut self, sym: &str) -> bool {
        if self.at_sym(sym) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn error(&self, message: impl Into<String>, expected: &[&str]) -> ParseError {
        ParseError {
            span: self.span(),
            message: message.into(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        self.error(format!("unexpected {}", self.peek().describe()), expected)
    }

    fn expect(&mut self, sym: &'static str) -> PResult<SourceSpan> {
        if self.at_sym(sym) {
            Ok(self.bump().span)
        } else {
            Err(self.unexpected(&[&format!("`{sym}`")]))
        }
    }

    fn expect_eof(&mut self) -> PResult<()> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            Err(self.unexpected(&["end of input"]))
        }
    }

    fn node(kind: Kind, payload: Payload, children: Vec<Formula>, span: SourceSpan) -> Formula {
        Formula::raw(kind, payload, children, span)
    }

    fn binary(kind: Kind, l: Formula, r: Formula) -> Formula {
        let span = l.span().join(r.span());
        Self::node(kind, Payload::None, vec![l, r], span)
    }

    // ---- predicates ----

    fn parse_predicate(&mut self) -> PResult<Formula> {
        let left = self.parse_implication()?;
        if self.eat("<=>") {
            let right = self.parse_implication()?;
            if self.at_sym("<=>") {
                return Err(self.error("`<=>` is non-associative; add parentheses", &[]));
            }
            return Ok(Self::binary(Kind::Iff, left, right));
        }
        Ok(left)
    }

    fn parse_implication(&mut self) -> PResult<Formula> {
        let left = self.parse_disjunction()?;
        if self.eat("=>") {
            let right = self.parse_implication()?;
            return Ok(Self::binary(Kind::Implies, left, right));
        }
        Ok(left)
    }

    fn parse_disjunction(&mut self) -> PResult<Formula> {
        let mut left = self.parse_conjunction()?;
        while self.eat("or") {
            let right = self.parse_conjunction()?;
            left = Self::binary(Kind::Or, left, right);
        }
        Ok(left)
    }

    fn parse_conjunction(&mut self) -> PResult<Formula> {
        let mut left = self.parse_unary_predicate()?;
        while self.eat("&") {
            let right = self.parse_unary_predicate()?;
            left = Self::binary(Kind::And, left, right);
        }
        Ok(left)
    }

    fn parse_unary_predicate(&mut self) -> PResult<Formula> {
        let start = self.span();
        if self.eat("not") {
            let operand = self.parse_unary_predicate()?;
            let span = start.join(operand.span());
            return Ok(Self::node(Kind::Not, Payload::None, vec![operand], span));
        }
        let quantifier = if self.at_sym("!") {
            Some(Kind::Forall)
        } else if self.at_sym("#") {
            Some(Kind::Exists)
        } else {
            None
        };
        if let Some(kind) = quantifier {
            self.bump();
            let vars = self.parse_binders()?;
            self.expect(".")?;
            let body = self.parse_predicate()?;
            let span = start.join(body.span());
            return Ok(Self::node(kind, Payload::Bound(vars), vec![body], span));
        }
        self.parse_atomic_predicate()
    }

    fn parse_binders(&mut self) -> PResult<Vec<String>> {
        let mut vars: Vec<String> = Vec::new();
        loop {
            let name = match self.peek().clone() {
                Tok::Ident(n) => n,
                _ => return Err(self.unexpected(&["bound variable"])),
            };
            self.check_ident(&name)?;
            if vars.contains(&name) {
                return Err(self.error(format!("variable `{name}` bound twice"), &[]));
            }
            self.bump();
            vars.push(name);
            if !self.eat(",") {
                return Ok(vars);
            }
        }
    }

    fn parse_atomic_predicate(&mut self) -> PResult<Formula> {
        let start = self.span();
        if self.eat("true") {
            return Ok(Self::node(Kind::True, Payload::None, vec![], start));
        }
        if self.eat("false") {
            return Ok(Self::node(Kind::False, Payload::None, vec![], start));
        }
        let mut paren_err = None;
        if self.at_sym("(") {
            let saved = self.pos;
            self.bump();
            let inner = self
                .parse_predicate()
                .and_then(|p| self.expect(")").map(|end| (p, end)));
            match inner {
                Ok((p, end)) => return Ok(p.with_span(start.join(end))),
                Err(e) => {
                    paren_err = Some(e);
                    self.pos = saved;
                }
            }
        }
        let comparison = self.parse_comparison();
        match (comparison, paren_err) {
            (Ok(f), _) => Ok(f),
            (Err(e), Some(pe)) => Err(furthest(pe, e)),
            (Err(e), None) => Err(e),
        }
    }

    fn parse_comparison(&mut self) -> PResult<Formula> {
        let left = self.parse_expression()?;
        let kind = match self.peek() {
            Tok::Sym(s) => comparison_kind(s),
            _ => None,
        };
        let Some(kind) = kind else {
            return Err(self.unexpected(&["comparison operator"]));
        };
        self.bump();
        let right = self.parse_expression()?;
        if let Tok::Sym(s) = self.peek() {
            if comparison_kind(s).is_some() {
                return Err(self.error("comparisons are non-associative; add parentheses", &[]));
            }
        }
        Ok(Self::binary(kind, left, right))
    }

    // ---- expressions ----

    fn parse_expression(&mut self) -> PResult<Formula> {
        let mut left = self.parse_maplet()?;
        let mut chain: Option<Kind> = None;
        loop {
            let kind = match self.peek() {
                Tok::Sym(s) => set_operator_kind(s),
                _ => None,
            };
            let Some(kind) = kind else { break };
            if let Some(prev) = chain {
                if prev != kind {
                    return Err(self.error(
                        format!("`{}` after `{}` requires parentheses", kind.symbol(), prev.symbol()),
                        &[],
                    ));
                }
            }
            chain = Some(kind);
            self.bump();
            let right = self.parse_maplet()?;
            left = Self::binary(kind, left, right);
        }
        Ok(left)
    }

    fn parse_maplet(&mut self) -> PResult<Formula> {
        let left = self.parse_additive()?;
        if self.eat("|->") {
            let right = self.parse_maplet()?;
            return Ok(Self::binary(Kind::Maplet, left, right));
        }
        Ok(left)
    }

    fn parse_additive(&mut self) -> PResult<Formula> {
        let mut left = self.parse_multiplicative()?;
        loop {
            let kind = if self.at_sym("+") {
                Kind::Add
            } else if self.at_sym("-") {
                Kind::Sub
            } else {
                break;
            };
            self.bump();
            let right = self.parse_multiplicative()?;
            left = Self::binary(kind, left, right);
        }
        Ok(left)
    }

    fn parse_multiplicative(&mut self) -> PResult<Formula> {
        let mut left = self.parse_negation()?;
        loop {
            let kind = if self.at_sym("*") {
                Kind::Mul
            } else if self.at_sym("/") {
                Kind::Div
            } else if self.at_sym("mod") {
                Kind::Mod
            } else {
                break;
            };
            self.bump();
            let right = self.parse_negation()?;
            left = Self::binary(kind, left, right);
        }
        Ok(left)
    }

    /// Unary minus: a negative literal when applied directly to an integer,
    /// otherwise `0 - e`.
    fn parse_negation(&mut self) -> PResult<Formula> {
        let start = self.span();
        if !self.eat("-") {
            return self.parse_postfix();
        }
        if let Tok::Int(digits) = self.peek().clone() {
            let postfix_follows = matches!(self.peek_at(1), Tok::Sym("(") | Tok::Sym("["));
            if !postfix_follows {
                let end = self.bump().span;
                let value = parse_int(&digits, true).ok_or_else(|| ParseError {
                    span: start.join(end),
                    message: "integer literal out of range".into(),
                    expected: Vec::new(),
                })?;
                return Ok(Self::node(Kind::IntLit, Payload::Int(value), vec![], start.join(end)));
            }
        }
        let operand = self.parse_negation()?;
        let zero = Self::node(Kind::IntLit, Payload::Int(0), vec![], start);
        Ok(Self::binary(Kind::Sub, zero, operand))
    }

    fn parse_postfix(&mut self) -> PResult<Formula> {
        let mut base = self.parse_atom()?;
        loop {
            let (kind, close) = if self.at_sym("(") {
                (Kind::FunApp, ")")
            } else if self.at_sym("[") {
                (Kind::Image, "]")
            } else {
                break;
            };
            self.bump();
            let arg = self.parse_expression()?;
            let end = self.expect(close)?;
            let span = base.span().join(end);
            base = Self::node(kind, Payload::None, vec![base, arg], span);
        }
        Ok(base)
    }

    fn parse_atom(&mut self) -> PResult<Formula> {
        let start = self.span();
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.check_ident(&name)?;
                self.bump();
                Ok(Self::node(Kind::Ident, Payload::Name(name), vec![], start))
            }
            Tok::Meta(name) => {
                if !self.options.allow_metavars {
                    return Err(self.error("metavariables are only allowed in lemma patterns", &[]));
                }
                self.bump();
                Ok(Self::node(Kind::MetaVar, Payload::Name(name), vec![], start))
            }
            Tok::Int(digits) => {
                let value = parse_int(&digits, false).ok_or_else(|| self.error("integer literal out of range", &[]))?;
                self.bump();
                Ok(Self::node(Kind::IntLit, Payload::Int(value), vec![], start))
            }
            Tok::Sym("NAT") => {
                self.bump();
                Ok(Self::node(Kind::Nat, Payload::None, vec![], start))
            }
            Tok::Sym("INT") => {
                self.bump();
                Ok(Self::node(Kind::Int, Payload::None, vec![], start))
            }
            Tok::Sym("{") => {
                self.bump();
                let mut elements = vec![self.parse_expression()?];
                while self.eat(",") {
                    elements.push(self.parse_expression()?);
                }
                let end = self.expect("}")?;
                Ok(Self::node(Kind::SetExtension, Payload::None, elements, start.join(end)))
            }
            Tok::Sym("(") => {
                self.bump();
                let inner = self.parse_expression()?;
                let end = self.expect(")")?;
                Ok(inner.with_span(start.join(end)))
            }
            Tok::Sym(s @ ("POW" | "dom" | "ran")) => {
                let kind = match s {
                    "POW" => Kind::Pow,
                    "dom" => Kind::Dom,
                    _ => Kind::Ran,
                };
                self.bump();
                self.expect("(")?;
                let arg = self.parse_expression()?;
                let end = self.expect(")")?;
                Ok(Self::node(kind, Payload::None, vec![arg], start.join(end)))
            }
            _ => Err(self.unexpected(&["expression"])),
        }
    }

    fn check_ident(&self, name: &str) -> PResult<()> {
        if !self.options.allow_primes && name.contains('\'') {
            return Err(self.error(
                format!("primed identifier `{name}` is reserved for post-state variables"),
                &[],
            ));
        }
        if name.contains('\'') && !is_well_primed(name) {
            return Err(self.error(format!("malformed primed identifier `{name}`"), &[]));
        }
        Ok(())
    }
}

/// A prime may only appear once, as the last character.
fn is_well_primed(name: &str) -> bool {
    let body = name.strip_suffix('\'').unwrap_or(name);
    !body.contains('\'')
}

fn parse_int(digits: &str, negative: bool) -> Option<i64> {
    let magnitude: i128 = digits.parse().ok()?;
    let value = if negative { -magnitude } else { magnitude };
    i64::try_from(value).ok()
}
