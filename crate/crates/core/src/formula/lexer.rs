use super::SourceSpan;

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Meta(String),
    Int(String),
    /// Operator or punctuation, normalized to its ASCII spelling.
    Sym(&'static str),
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(n) => format!("identifier `{n}`"),
            Tok::Meta(n) => format!("metavariable `?{n}`"),
            Tok::Int(v) => format!("integer `{v}`"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".to_string(),
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
}

/// ASCII operators, longest first within each shared prefix.
const ASCII_SYMBOLS: &[&str] = &[
    "<=>", "<->", "<=", "<+", "<:", "<", "=>", "=", ">=", ">", "/=", "/\\", "/", "\\/", "\\", "**", "*", "+->", "+",
    "-->", "-", "|->", ":", "!", "#", ".", ",", "(", ")", "[", "]", "{", "}", "&",
];

/// Unicode spellings accepted as aliases of the ASCII notation.
const UNICODE_SYMBOLS: &[(char, &str)] = &[
    ('∈', ":"),
    ('⊆', "<:"),
    ('↦', "|->"),
    ('⊕', "<+"),
    ('→', "-->"),
    ('⇸', "+->"),
    ('↔', "<->"),
    ('∀', "!"),
    ('∃', "#"),
    ('·', "."),
    ('∧', "&"),
    ('∨', "or"),
    ('¬', "not"),
    ('⇒', "=>"),
    ('⇔', "<=>"),
    ('∪', "\\/"),
    ('∩', "/\\"),
    ('∖', "\\"),
    ('×', "**"),
    ('≠', "/="),
    ('≤', "<="),
    ('≥', ">="),
    ('ℕ', "NAT"),
    ('ℤ', "INT"),
    ('÷', "/"),
];

pub(crate) const KEYWORDS: &[&str] = &["or", "not", "mod", "POW", "NAT", "INT", "dom", "ran", "true", "false"];

#[derive(Debug)]
pub(crate) struct LexError {
    pub span: SourceSpan,
    pub message: String,
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\''
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<Token>, LexError> {
    let mut out = Vec::new();
    let mut i = 0;
    let bytes = src.as_bytes();
    while i < src.len() {
        let c = src[i..].chars().next().expect("in bounds");
        if c.is_whitespace() {
            i += c.len_utf8();
            continue;
        }
        let start = i;
        if is_ident_start(c) {
            while i < src.len() && is_ident_char(bytes[i] as char) {
                i += 1;
            }
            let word = &src[start..i];
            let tok = match KEYWORDS.iter().find(|k| **k == word) {
                Some(k) => Tok::Sym(k),
                None => Tok::Ident(word.to_string()),
            };
            out.push(Token {
                tok,
                span: SourceSpan::new(start, i),
            });
            continue;
        }
        if c.is_ascii_digit() {
            while i < src.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            out.push(Token {
                tok: Tok::Int(src[start..i].to_string()),
                span: SourceSpan::new(start, i),
            });
            continue;
        }
        if c == '?' {
            i += 1;
            if i < src.len() && is_ident_start(bytes[i] as char) {
                while i < src.len() && is_ident_char(bytes[i] as char) {
                    i += 1;
                }
                out.push(Token {
                    tok: Tok::Meta(src[start + 1..i].to_string()),
                    span: SourceSpan::new(start, i),
                });
                continue;
            }
            return Err(LexError {
                span: SourceSpan::new(start, i),
                message: "`?` must be followed by a metavariable name".into(),
            });
        }
        if let Some(sym) = ASCII_SYMBOLS.iter().find(|s| src[i..].starts_with(**s)) {
            i += sym.len();
            out.push(Token {
                tok: Tok::Sym(sym),
                span: SourceSpan::new(start, i),
            });
            continue;
        }
        if let Some((_, sym)) = UNICODE_SYMBOLS.iter().find(|(u, _)| *u == c) {
            i += c.len_utf8();
            out.push(Token {
                tok: Tok::Sym(sym),
                span: SourceSpan::new(start, i),
            });
            continue;
        }
        return Err(LexError {
            span: SourceSpan::new(start, start + c.len_utf8()),
            message: format!("unexpected character `{c}`"),
        });
    }
    out.push(Token {
        tok: Tok::Eof,
        span: SourceSpan::new(src.len(), src.len()),
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn longest_match() {
        assert_eq!(
            toks("a-->b"),
            [
                Tok::Ident("a".into()),
                Tok::Sym("-->"),
                Tok::Ident("b".into()),
                Tok::Eof
            ]
        );
        assert_eq!(toks("a--3")[1..4], [Tok::Sym("-"), Tok::Sym("-"), Tok::Int("3".into())]);
        assert_eq!(toks("<=>")[0], Tok::Sym("<=>"));
        assert_eq!(toks("x'")[0], Tok::Ident("x'".into()));
    }

    #[test]
    fn unicode_aliases() {
        assert_eq!(
            toks("f ∈ A → ℕ"),
            [
                Tok::Ident("f".into()),
                Tok::Sym(":"),
                Tok::Ident("A".into()),
                Tok::Sym("-->"),
                Tok::Sym("NAT"),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn spans_are_byte_offsets() {
        let t = tokenize("∀x").unwrap();
        assert_eq!(t[1].span, SourceSpan::new(3, 4));
    }
}
