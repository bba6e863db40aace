use super::{Formula, Kind, Payload};

/// Canonical text with minimal parentheses.
///
/// Arithmetic operators print without surrounding spaces, everything else
/// with single spaces. Quantifiers are parenthesized unless they stand at the
/// top level or directly as another quantifier's body.
pub fn print_formula(f: &Formula) -> String {
    let mut out = String::new();
    write(f, 0, &mut out);
    out
}

const LOOSEST: u8 = 0;
const SET_OPS: u8 = 10;
const MAPLET: u8 = 11;
const ADDITIVE: u8 = 12;
const MULTIPLICATIVE: u8 = 13;
const NEGATIVE: u8 = 14;
const POSTFIX: u8 = 15;
const ATOM: u8 = 16;

fn level(f: &Formula) -> u8 {
    use Kind::*;
    match f.kind() {
        Forall | Exists => 0,
        Iff => 1,
        Implies => 2,
        Or => 3,
        And => 4,
        Not => 5,
        True | False | Equal | NotEqual | In | SubsetEq | Lt | Le | Gt | Ge => 6,
        Union | Inter | SetMinus | CartProd | Override | TotalFun | PartialFun | Relation => SET_OPS,
        Maplet => MAPLET,
        Add | Sub => ADDITIVE,
        Mul | Div | Mod => MULTIPLICATIVE,
        IntLit if f.int_value().is_some_and(|v| v < 0) => NEGATIVE,
        FunApp | Image => POSTFIX,
        Ident | IntLit | MetaVar | Nat | Int | SetExtension | Pow | Dom | Ran => ATOM,
    }
}

/// Binding levels required of the (left, right) operands of a binary node.
fn operand_levels(f: &Formula) -> (u8, u8) {
    use Kind::*;
    let kind = f.kind();
    match kind {
        Iff => (2, 2),
        Implies => (3, 2),
        Or => (3, 4),
        And => (4, 5),
        k if k.is_comparison() => (SET_OPS, SET_OPS),
        k if k.is_set_operator() => {
            // Chains of one operator associate left; mixing operators needs parentheses.
            let left = if f.children()[0].kind() == kind {
                SET_OPS
            } else {
                MAPLET
            };
            (left, MAPLET)
        }
        Maplet => (ADDITIVE, MAPLET),
        Add | Sub => (ADDITIVE, MULTIPLICATIVE),
        Mul | Div | Mod => (MULTIPLICATIVE, NEGATIVE),
        FunApp | Image => (POSTFIX, LOOSEST),
        _ => unreachable!("{kind:?} is not binary"),
    }
}

fn infix(kind: Kind) -> &'static str {
    use Kind::*;
    match kind {
        Add => "+",
        Sub => "-",
        Mul => "*",
        Div => "/",
        Mod => " mod ",
        Iff => " <=> ",
        Implies => " => ",
        Or => " or ",
        And => " & ",
        Maplet => " |-> ",
        Equal => " = ",
        NotEqual => " /= ",
        In => " : ",
        SubsetEq => " <: ",
        Lt => " < ",
        Le => " <= ",
        Gt => " > ",
        Ge => " >= ",
        Union => " \\/ ",
        Inter => " /\\ ",
        SetMinus => " \\ ",
        CartProd => " ** ",
        Override => " <+ ",
        TotalFun => " --> ",
        PartialFun => " +-> ",
        Relation => " <-> ",
        _ => unreachable!("{kind:?} is not infix"),
    }
}

fn write(f: &Formula, required: u8, out: &mut String) {
    if level(f) < required {
        out.push('(');
        write(f, LOOSEST, out);
        out.push(')');
        return;
    }
    let children = f.children();
    match f.kind() {
        Kind::Ident | Kind::MetaVar => {
            if f.kind() == Kind::MetaVar {
                out.push('?');
            }
            out.push_str(f.name().unwrap_or_default());
        }
        Kind::IntLit => out.push_str(&f.int_value().unwrap_or_default().to_string()),
        Kind::True => out.push_str("true"),
        Kind::False => out.push_str("false"),
        Kind::Nat => out.push_str("NAT"),
        Kind::Int => out.push_str("INT"),
        Kind::Not => {
            out.push_str("not ");
            write(&children[0], 5, out);
        }
        Kind::Forall | Kind::Exists => {
            out.push(if f.kind() == Kind::Forall { '!' } else { '#' });
            if let Payload::Bound(vars) = f.payload() {
                out.push_str(&vars.join(","));
            }
            out.push_str(". ");
            write(&children[0], LOOSEST, out);
        }
        Kind::SetExtension => {
            out.push('{');
            for (i, e) in children.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write(e, LOOSEST, out);
            }
            out.push('}');
        }
        Kind::Pow | Kind::Dom | Kind::Ran => {
            out.push_str(f.kind().symbol());
            out.push('(');
            write(&children[0], LOOSEST, out);
            out.push(')');
        }
        Kind::FunApp | Kind::Image => {
            let (open, close) = if f.kind() == Kind::FunApp {
                ('(', ')')
            } else {
                ('[', ']')
            };
            write(&children[0], POSTFIX, out);
            out.push(open);
            write(&children[1], LOOSEST, out);
            out.push(close);
        }
        kind => {
            let (left, right) = operand_levels(f);
            write(&children[0], left, out);
            out.push_str(infix(kind));
            write(&children[1], right, out);
        }
    }
}
