//! Proof-obligation preparation for Event-B style models.
//!
//! The crate covers the whole path from a machine file to a recorded prover
//! verdict:
//!
//! * [`formula`]: AST, parser, printer, substitution and hashing;
//! * [`shingle`]: operator skeletons and depth/structure shingle profiles;
//! * [`similarity`]: Jaccard and weighted shingle scores, hypothesis selection;
//! * [`lemma`]: schematic lemma store, trigger matching and instantiation;
//! * [`obligation`]: machine parsing and invariant-preservation obligations;
//! * [`prover`]: theory translation, external provers, stub prover, ledger;
//! * [`pipeline`]: the end-to-end batch run.

pub mod formula;
pub mod lemma;
pub mod obligation;
pub mod pipeline;
pub mod prover;
pub mod shingle;
pub mod similarity;
