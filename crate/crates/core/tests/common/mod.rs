#![allow(dead_code)]

pub mod oracle;

use obsel_core::formula::{Formula, Kind};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FREE: &[&str] = &["a", "b", "x", "y", "f", "g", "S", "T", "n1"];
pub const BOUND: &[&str] = &["u", "v", "w"];

const COMPARISONS: &[Kind] = &[
    Kind::Equal,
    Kind::NotEqual,
    Kind::In,
    Kind::SubsetEq,
    Kind::Lt,
    Kind::Le,
    Kind::Gt,
    Kind::Ge,
];

const CONNECTIVES: &[Kind] = &[Kind::And, Kind::Or, Kind::Implies, Kind::Iff];

const BINARY_EXPR: &[Kind] = &[
    Kind::Add,
    Kind::Sub,
    Kind::Mul,
    Kind::Div,
    Kind::Mod,
    Kind::Union,
    Kind::Inter,
    Kind::SetMinus,
    Kind::CartProd,
    Kind::Maplet,
    Kind::Image,
    Kind::Override,
    Kind::TotalFun,
    Kind::PartialFun,
    Kind::Relation,
    Kind::FunApp,
];

const UNARY_EXPR: &[Kind] = &[Kind::Pow, Kind::Dom, Kind::Ran];

/// Seeded random formulas over a fixed identifier vocabulary.
pub struct Gen {
    pub rng: ChaCha8Rng,
    free: Vec<String>,
    bound: Vec<String>,
}

impl Gen {
    pub fn new(seed: u64) -> Gen {
        Gen::with_idents(seed, FREE)
    }

    pub fn with_idents(seed: u64, free: &[&str]) -> Gen {
        Gen {
            rng: ChaCha8Rng::seed_from_u64(seed),
            free: free.iter().map(|s| s.to_string()).collect(),
            bound: Vec::new(),
        }
    }

    fn pick<T: Copy>(&mut self, items: &[T]) -> T {
        *items.choose(&mut self.rng).expect("non-empty choice")
    }

    /// A predicate of depth at most `depth` (at least 1).
    pub fn predicate(&mut self, depth: usize) -> Formula {
        if depth <= 1 {
            return Formula::constant(if self.rng.gen() { Kind::True } else { Kind::False });
        }
        let roll = self.rng.gen_range(0..10);
        match roll {
            0..=3 => {
                let k = self.pick(COMPARISONS);
                let l = self.expression(depth - 1);
                let r = self.expression(depth - 1);
                Formula::binary(k, l, r)
            }
            4..=6 => {
                let k = self.pick(CONNECTIVES);
                let l = self.predicate(depth - 1);
                let r = self.predicate(depth - 1);
                Formula::binary(k, l, r)
            }
            7 => Formula::unary(Kind::Not, self.predicate(depth - 1)),
            _ => {
                let k = if roll == 8 { Kind::Forall } else { Kind::Exists };
                let count = self.rng.gen_range(1..=2);
                let mut vars: Vec<String> = BOUND.iter().map(|s| s.to_string()).collect();
                vars.shuffle(&mut self.rng);
                vars.truncate(count);
                let mark = self.bound.len();
                self.bound.extend(vars.iter().cloned());
                let body = self.predicate(depth - 1);
                self.bound.truncate(mark);
                Formula::quantifier(k, vars, body)
            }
        }
    }

    /// An expression of depth at most `depth` (at least 1).
    pub fn expression(&mut self, depth: usize) -> Formula {
        if depth <= 1 || self.rng.gen_bool(0.15) {
            return self.atom();
        }
        match self.rng.gen_range(0..10) {
            0..=6 => {
                let k = self.pick(BINARY_EXPR);
                let l = self.expression(depth - 1);
                let r = self.expression(depth - 1);
                Formula::binary(k, l, r)
            }
            7..=8 => {
                let k = self.pick(UNARY_EXPR);
                Formula::unary(k, self.expression(depth - 1))
            }
            _ => {
                let count = self.rng.gen_range(1..=3);
                let elems = (0..count).map(|_| self.expression(depth - 1)).collect();
                Formula::set_extension(elems)
            }
        }
    }

    pub fn atom(&mut self) -> Formula {
        match self.rng.gen_range(0..10) {
            0..=5 => {
                let pool: Vec<String> = self.free.iter().chain(&self.bound).cloned().collect();
                Formula::ident(pool.choose(&mut self.rng).expect("identifier").clone())
            }
            6..=7 => Formula::int(self.rng.gen_range(-20..=99)),
            8 => Formula::constant(Kind::Nat),
            _ => Formula::constant(Kind::Int),
        }
    }

    /// Either a predicate or an expression.
    pub fn formula(&mut self, depth: usize) -> Formula {
        if self.rng.gen_bool(0.7) {
            self.predicate(depth)
        } else {
            self.expression(depth)
        }
    }
}

/// Balanced `+`/`*` tree with exactly `nodes` nodes (odd counts).
pub fn balanced_tree(nodes: usize) -> Formula {
    fn build(nodes: usize, level: usize, next: &mut usize) -> Formula {
        if nodes <= 1 {
            *next += 1;
            return Formula::ident(format!("x{}", *next % 17));
        }
        let inner = nodes - 1;
        let left = (inner / 2) | 1;
        let right = inner - left;
        let kind = if level.is_multiple_of(2) { Kind::Add } else { Kind::Mul };
        let l = build(left, level + 1, next);
        let r = build(right.max(1), level + 1, next);
        Formula::binary(kind, l, r)
    }
    build(nodes, 0, &mut 0)
}
