//! Append-only JSON Lines record of proof attempts.

use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::Verdict;
use crate::similarity::ScoreParams;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttemptRecord {
    /// RFC 3339 UTC timestamp.
    pub ts: String,
    pub po_id: String,
    /// Sequent hash as 16 lowercase hex digits.
    pub po_hash: String,
    pub prover: String,
    pub params: ScoreParams,
    pub n_hyps: usize,
    pub lemmas: Vec<String>,
    pub verdict: Verdict,
    pub ms: u64,
    /// Obligation text with identifiers renamed; only written when requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub po_text: Option<String>,
}

impl AttemptRecord {
    pub fn now_ts() -> String {
        chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
    }

    pub fn hash_hex(hash: u64) -> String {
        format!("{hash:016x}")
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LedgerError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed record: {message}")]
    MalformedRecord {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

/// Appends one line under an exclusive file lock and syncs it to disk.
pub fn record_attempt(path: &Path, record: &AttemptRecord) -> Result<(), LedgerError> {
    let io = |source| LedgerError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut line = serde_json::to_string(record).expect("record serializes");
    line.push('\n');
    let mut file = OpenOptions::new().create(true).append(true).open(path).map_err(io)?;
    file.lock().map_err(io)?;
    let written = file.write_all(line.as_bytes()).and_then(|_| file.sync_data());
    let _ = file.unlock();
    written.map_err(io)
}

pub fn read_ledger(path: &Path) -> Result<Vec<AttemptRecord>, LedgerError> {
    let text = std::fs::read_to_string(path).map_err(|source| LedgerError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| LedgerError::MalformedRecord {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Aggregate {
    pub attempts: usize,
    pub valid: usize,
    pub by_verdict: BTreeMap<Verdict, usize>,
    pub total_ms: u64,
}

impl Aggregate {
    fn add(&mut self, r: &AttemptRecord) {
        self.attempts += 1;
        if r.verdict == Verdict::Valid {
            self.valid += 1;
        }
        *self.by_verdict.entry(r.verdict).or_default() += 1;
        self.total_ms += r.ms;
    }

    /// Fraction of attempts that were Valid; 0 for no attempts.
    pub fn success_rate(&self) -> f64 {
        if self.attempts == 0 {
            0.0
        } else {
            self.valid as f64 / self.attempts as f64
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct LedgerStats {
    pub records: usize,
    pub by_prover: BTreeMap<String, Aggregate>,
    pub by_lemma: BTreeMap<String, Aggregate>,
}

pub fn aggregate(records: &[AttemptRecord]) -> LedgerStats {
    let mut stats = LedgerStats {
        records: records.len(),
        ..LedgerStats::default()
    };
    for r in records {
        stats.by_prover.entry(r.prover.clone()).or_default().add(r);
        for lemma in &r.lemmas {
            stats.by_lemma.entry(lemma.clone()).or_default().add(r);
        }
    }
    stats
}

pub fn ledger_stats(path: &Path) -> Result<LedgerStats, LedgerError> {
    Ok(aggregate(&read_ledger(path)?))
}
