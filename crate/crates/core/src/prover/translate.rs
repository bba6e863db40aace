//! Sequent to theory-text translation through a [`TranslationMap`].
//!
//! Map file lines:
//!
//! * `header <text>`: emitted after the `theory` line, in order;
//! * `op <Kind> -> <symbol> <style> [nil]` where style is `infix`, `prefix`,
//!   `binder`, `literal` or `fold` (`fold` needs the empty-collection symbol);
//! * `block <name> supports <Kind>,...` followed by indented text lines.
//!
//! Model identifiers are rendered with a `c_` prefix so they never collide
//! with map symbols.

use std::collections::{BTreeMap, BTreeSet};

use crate::formula::{free_identifiers, Formula, Kind, Payload};
use crate::obligation::ProofObligation;

const DEFAULT_MAP: &str = include_str!("default.map");

const IDENT_PREFIX: &str = "c_";

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Style {
    Infix,
    Prefix,
    Binder,
    Literal,
    /// Right fold of a variadic node onto the given empty element.
    Fold(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OpEntry {
    pub symbol: String,
    pub style: Style,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PreludeBlock {
    pub name: String,
    pub supports: BTreeSet<Kind>,
    pub text: String,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum MapError {
    #[error("translation map line {line}: {message}")]
    Syntax { line: usize, message: String },
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum TranslateError {
    #[error("no translation for operator {0:?}")]
    UnmappedOperator(Kind),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TranslationMap {
    pub header: Vec<String>,
    pub ops: BTreeMap<Kind, OpEntry>,
    pub blocks: Vec<PreludeBlock>,
}

impl TranslationMap {
    pub fn default_map() -> TranslationMap {
        TranslationMap::parse(DEFAULT_MAP).expect("shipped translation map parses")
    }

    pub fn parse(text: &str) -> Result<TranslationMap, MapError> {
        let mut map = TranslationMap {
            header: Vec::new(),
            ops: BTreeMap::new(),
            blocks: Vec::new(),
        };
        let mut in_block = false;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let err = |message: String| MapError::Syntax { line: line_no, message };
            if raw.starts_with(char::is_whitespace) && !raw.trim().is_empty() {
                if !in_block {
                    return Err(err("indented text outside a block".into()));
                }
                let block = map.blocks.last_mut().expect("in block");
                let line = raw.strip_prefix("  ").unwrap_or(raw.trim_start());
                block.text.push_str(line);
                block.text.push('\n');
                continue;
            }
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            in_block = false;
            let (head, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
            let rest = rest.trim();
            match head {
                "header" => map.header.push(rest.to_string()),
                "op" => {
                    let words: Vec<&str> = rest.split_whitespace().collect();
                    let (kind, symbol, style, extra) = match words.as_slice() {
                        [k, "->", s, st] => (k, s, st, None),
                        [k, "->", s, st, e] => (k, s, st, Some(*e)),
                        _ => return Err(err(format!("expected `op <Kind> -> <symbol> <style>`, got `{line}`"))),
                    };
                    let kind = Kind::from_name(kind).ok_or_else(|| err(format!("unknown kind `{kind}`")))?;
                    let style = match (*style, extra) {
                        ("infix", None) => Style::Infix,
                        ("prefix", None) => Style::Prefix,
                        ("binder", None) => Style::Binder,
                        ("literal", None) => Style::Literal,
                        ("fold", Some(nil)) => Style::Fold(nil.to_string()),
                        _ => return Err(err(format!("invalid style in `{line}`"))),
                    };
                    if symbol.starts_with(IDENT_PREFIX) {
                        return Err(err(format!(
                            "symbol `{symbol}` uses the reserved `{IDENT_PREFIX}` prefix"
                        )));
                    }
                    let entry = OpEntry {
                        symbol: symbol.to_string(),
                        style,
                    };
                    if map.ops.insert(kind, entry).is_some() {
                        return Err(err(format!("duplicate entry for {kind:?}")));
                    }
                }
                "block" => {
                    let (name, supports) = match rest.split_whitespace().collect::<Vec<_>>().as_slice() {
                        [name, "supports", kinds] => (name.to_string(), *kinds),
                        _ => {
                            return Err(err(format!(
                                "expected `block <name> supports <Kind,...>`, got `{line}`"
                            )))
                        }
                    };
                    if map.blocks.iter().any(|b| b.name == name) {
                        return Err(err(format!("duplicate block `{name}`")));
                    }
                    let supports = supports
                        .split(',')
                        .map(|k| Kind::from_name(k.trim()).ok_or_else(|| err(format!("unknown kind `{k}`"))))
                        .collect::<Result<BTreeSet<Kind>, _>>()?;
                    map.blocks.push(PreludeBlock {
                        name,
                        supports,
                        text: String::new(),
                    });
                    in_block = true;
                }
                other => return Err(err(format!("unknown directive `{other}`"))),
            }
        }
        Ok(map)
    }

    /// Operator kinds that can occur in an obligation but have no entry.
    pub fn missing_kinds(&self) -> Vec<Kind> {
        Kind::ALL
            .iter()
            .copied()
            .filter(|k| !matches!(k, Kind::Ident | Kind::MetaVar) && !self.ops.contains_key(k))
            .collect()
    }

    /// Names of the blocks supporting any of `kinds`, in map order.
    pub fn blocks_for(&self, kinds: &BTreeSet<Kind>) -> Vec<&PreludeBlock> {
        self.blocks.iter().filter(|b| !b.supports.is_disjoint(kinds)).collect()
    }

    fn render(&self, f: &Formula, out: &mut String) -> Result<(), TranslateError> {
        if let Payload::Name(n) = f.payload() {
            if f.kind() == Kind::Ident {
                out.push_str(IDENT_PREFIX);
                out.push_str(n);
                return Ok(());
            }
        }
        let entry = self
            .ops
            .get(&f.kind())
            .ok_or(TranslateError::UnmappedOperator(f.kind()))?;
        let children = f.children();
        match &entry.style {
            Style::Literal => {
                let v = f.int_value().expect("literal payload");
                if v < 0 {
                    out.push_str(&format!("({} ({v}))", entry.symbol));
                } else {
                    out.push_str(&format!("({} {v})", entry.symbol));
                }
            }
            Style::Prefix if children.is_empty() => out.push_str(&entry.symbol),
            Style::Prefix => {
                out.push('(');
                out.push_str(&entry.symbol);
                for c in children {
                    out.push(' ');
                    self.render(c, out)?;
                }
                out.push(')');
            }
            Style::Infix => {
                out.push('(');
                for (i, c) in children.iter().enumerate() {
                    if i > 0 {
                        out.push(' ');
                        out.push_str(&entry.symbol);
                        out.push(' ');
                    }
                    self.render(c, out)?;
                }
                out.push(')');
            }
            Style::Binder => {
                let vars: Vec<String> = f.bound_vars().iter().map(|v| format!("{IDENT_PREFIX}{v}")).collect();
                out.push_str(&format!("({} {} : u. ", entry.symbol, vars.join(" ")));
                for c in children {
                    self.render(c, out)?;
                }
                out.push(')');
            }
            Style::Fold(nil) => {
                for c in children {
                    out.push('(');
                    out.push_str(&entry.symbol);
                    out.push(' ');
                    self.render(c, out)?;
                    out.push(' ');
                }
                out.push_str(nil);
                for _ in children {
                    out.push(')');
                }
            }
        }
        Ok(())
    }

    pub fn render_formula(&self, f: &Formula) -> Result<String, TranslateError> {
        let mut out = String::new();
        self.render(f, &mut out)?;
        Ok(out)
    }
}

fn sanitize(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' })
        .collect()
}

/// Operator kinds occurring anywhere in the sequent.
pub fn sequent_kinds(po: &ProofObligation) -> BTreeSet<Kind> {
    po.hypotheses
        .iter()
        .map(|h| &h.formula)
        .chain(std::iter::once(&po.goal))
        .flat_map(|f| f.subterms().map(Formula::kind))
        .collect()
}

/// Renders `po` as a theory: header, the prelude blocks its operators need,
/// one constant per free identifier, one axiom per hypothesis and the goal.
pub fn translate_sequent(po: &ProofObligation, map: &TranslationMap) -> Result<String, TranslateError> {
    let kinds = sequent_kinds(po);
    if let Some(k) = kinds.iter().find(|k| **k != Kind::Ident && !map.ops.contains_key(k)) {
        return Err(TranslateError::UnmappedOperator(*k));
    }
    let mut out = format!("theory Po_{}\n", sanitize(&po.id));
    for h in &map.header {
        out.push_str(h);
        out.push('\n');
    }
    for block in map.blocks_for(&kinds) {
        out.push_str(&block.text);
    }
    let idents: BTreeSet<String> = po
        .hypotheses
        .iter()
        .map(|h| &h.formula)
        .chain(std::iter::once(&po.goal))
        .flat_map(free_identifiers)
        .collect();
    for id in &idents {
        out.push_str(&format!("constant {IDENT_PREFIX}{id} : u\n"));
    }
    for (i, h) in po.hypotheses.iter().enumerate() {
        out.push_str(&format!(
            "axiom h{i}_{} : {}\n",
            sanitize(&h.label),
            map.render_formula(&h.formula)?
        ));
    }
    out.push_str(&format!("goal g : {}\n", map.render_formula(&po.goal)?));
    out.push_str("end\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;
    use crate::obligation::{generate_inv_pos, parse_machine};

    fn names(blocks: &[&PreludeBlock]) -> Vec<String> {
        blocks.iter().map(|b| b.name.clone()).collect()
    }

    #[test]
    fn default_map_is_complete() {
        let map = TranslationMap::default_map();
        assert_eq!(map.missing_kinds(), []);
        assert_eq!(map.header, ["type u"]);
    }

    #[test]
    fn trivial_goal() {
        let po = ProofObligation::new("t/e/i/INV", "t", "p", vec![], parse_formula("1 = 1").unwrap());
        let text = translate_sequent(&po, &TranslationMap::default_map()).unwrap();
        assert!(text.starts_with("theory Po_t_e_i_INV\ntype u\nfunction lit int : u\n"));
        assert!(text.ends_with("goal g : ((lit 1) = (lit 1))\nend\n"));
        assert!(!text.contains("predicate mem"));
        assert!(!text.contains("constant"));
    }

    #[test]
    fn library_blocks() {
        let src = "machine lib0 project demo\nsets BOOKS\nvariables library\ninvariants\n @inv1 library : BOOKS --> NAT\nevents\n event lend any b n where\n  @grd1 b : BOOKS\n  @grd2 n : NAT\n then\n  @act1 library := library <+ {b |-> n}\n end\n";
        let po = generate_inv_pos(&parse_machine(src).unwrap()).remove(0);
        let map = TranslationMap::default_map();
        let blocks = names(&map.blocks_for(&sequent_kinds(&po)));
        for needed in ["membership", "tfun", "override"] {
            assert!(blocks.contains(&needed.to_string()), "{blocks:?}");
        }
        assert!(!blocks.contains(&"cprod".to_string()));
        let a = translate_sequent(&po, &map).unwrap();
        assert_eq!(a, translate_sequent(&po, &map).unwrap());
        assert!(a.contains("constant c_library' : u\n"));
        assert!(a.contains("axiom h3_act1 : (c_library' = (override c_library (add (pair c_b c_n) empty)))\n"));
    }

    #[test]
    fn rendering_styles() {
        let map = TranslationMap::default_map();
        let f = parse_formula("!x,y. x : {1, -2} => not(y = x)").unwrap();
        assert_eq!(
            map.render_formula(&f).unwrap(),
            "(forall c_x c_y : u. ((mem c_x (add (lit 1) (add (lit (-2)) empty))) -> (not (c_y = c_x))))"
        );
    }

    #[test]
    fn unmapped_operator() {
        let mut map = TranslationMap::default_map();
        map.ops.remove(&Kind::Override);
        let po = ProofObligation::new("x", "m", "p", vec![], parse_formula("f <+ g = h").unwrap());
        assert_eq!(
            translate_sequent(&po, &map),
            Err(TranslateError::UnmappedOperator(Kind::Override))
        );
    }

    #[test]
    fn map_errors() {
        assert!(TranslationMap::parse("op Plus -> + infix\n").is_err());
        assert!(TranslationMap::parse("op Add -> + sideways\n").is_err());
        assert!(TranslationMap::parse("block a supports Add\nblock a supports Sub\n").is_err());
        assert!(TranslationMap::parse("  stray\n").is_err());
    }
}
