//! Stable structural hashing.
//!
//! A formula is serialized in pre-order. Each node contributes
//! `kind-name US payload US child-count RS`, where US is 0x1F, RS is 0x1E,
//! the payload is the identifier name, the decimal literal value, the bound
//! variables joined by `,`, or empty, and the child count is decimal. The
//! bytes are hashed with 64-bit FNV-1a. Spans do not participate.

use super::{Formula, Payload};

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

const UNIT_SEP: u8 = 0x1f;
const RECORD_SEP: u8 = 0x1e;

/// 64-bit FNV-1a.
#[derive(Clone, Copy, Debug)]
pub struct Fnv1a(u64);

impl Default for Fnv1a {
    fn default() -> Self {
        Fnv1a(FNV_OFFSET)
    }
}

impl Fnv1a {
    pub fn new() -> Fnv1a {
        Fnv1a::default()
    }

    pub fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= u64::from(b);
            self.0 = self.0.wrapping_mul(FNV_PRIME);
        }
    }

    pub fn write_formula(&mut self, f: &Formula) {
        let mut stack = vec![f];
        while let Some(node) = stack.pop() {
            self.write(node.kind().name().as_bytes());
            self.write(&[UNIT_SEP]);
            match node.payload() {
                Payload::None => {}
                Payload::Name(n) => self.write(n.as_bytes()),
                Payload::Int(v) => self.write(v.to_string().as_bytes()),
                Payload::Bound(vs) => self.write(vs.join(",").as_bytes()),
            }
            self.write(&[UNIT_SEP]);
            self.write(node.children().len().to_string().as_bytes());
            self.write(&[RECORD_SEP]);
            stack.extend(node.children().iter().rev());
        }
    }

    pub fn finish(self) -> u64 {
        self.0
    }
}

pub fn formula_hash(f: &Formula) -> u64 {
    let mut h = Fnv1a::new();
    h.write_formula(f);
    h.finish()
}
