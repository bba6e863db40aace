//! Theory translation, prover dispatch, the built-in stub prover and the
//! attempt ledger.

mod ledger;
mod run;
mod stub;
mod translate;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use ledger::{
    aggregate, ledger_stats, read_ledger, record_attempt, Aggregate, AttemptRecord, LedgerError, LedgerStats,
};
pub use run::{run_prover, ConfigError, ProverConfig, ProverRun};
pub use stub::stub_prove;
pub use translate::{
    sequent_kinds, translate_sequent, MapError, OpEntry, PreludeBlock, Style, TranslateError, TranslationMap,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Valid,
    Invalid,
    Unknown,
    Timeout,
    ToolError,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Verdict::Valid => "Valid",
            Verdict::Invalid => "Invalid",
            Verdict::Unknown => "Unknown",
            Verdict::Timeout => "Timeout",
            Verdict::ToolError => "ToolError",
        };
        f.write_str(s)
    }
}
