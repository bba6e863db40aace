//! End-to-end batch run: model, obligations, selection, lemma injection,
//! translation, proving and recording.

use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::formula::{free_identifiers, substitute, Binding, Formula};
use crate::lemma::{lemmas_in_scope, suggest_lemmas, LemmaError, LemmaStore};
use crate::obligation::{assemble_sequent, generate_inv_pos, parse_machine, Hypothesis, ModelError, ProofObligation};
use crate::prover::{
    record_attempt, run_prover, stub_prove, translate_sequent, AttemptRecord, LedgerError, ProverConfig,
    TranslationMap, Verdict,
};
use crate::similarity::{select, ParamError, ScoreParams, Source};

pub const STUB_PROVER_ID: &str = "stub";

/// How each obligation is prepared and proved.
#[derive(Clone, Debug)]
pub struct ProveOptions {
    pub params: ScoreParams,
    /// Tried in order until one answers Valid.
    pub provers: Vec<ProverConfig>,
    pub stub: bool,
    /// Receives `<id>.po` and `<id>.why` per obligation when set.
    pub out_dir: Option<PathBuf>,
    /// Also record the obligation text with identifiers renamed.
    pub obfuscate: bool,
    pub map: TranslationMap,
}

impl Default for ProveOptions {
    fn default() -> Self {
        ProveOptions {
            params: ScoreParams::default(),
            provers: Vec::new(),
            stub: false,
            out_dir: None,
            obfuscate: false,
            map: TranslationMap::default_map(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub machine: PathBuf,
    /// Directory of `.lemma` files; no lemmas when absent.
    pub store: Option<PathBuf>,
    pub ledger: Option<PathBuf>,
    /// Worker threads; 0 uses the rayon default.
    pub parallelism: usize,
    pub options: ProveOptions,
}

impl PipelineConfig {
    pub fn new(machine: impl Into<PathBuf>) -> PipelineConfig {
        PipelineConfig {
            machine: machine.into(),
            store: None,
            ledger: None,
            parallelism: 0,
            options: ProveOptions::default(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("no prover configured and stub mode is off")]
    NoProver,
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Model {
        path: PathBuf,
        #[source]
        source: ModelError,
    },
    #[error(transparent)]
    Lemma(#[from] LemmaError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error("thread pool: {0}")]
    Pool(String),
}

/// Outcome for one obligation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PoResult {
    pub po_id: String,
    /// Absent when the obligation failed before any prover ran.
    pub verdict: Option<Verdict>,
    /// Prover that produced the verdict.
    pub prover: Option<String>,
    pub lemmas: Vec<String>,
    pub ms: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct PipelineSummary {
    pub results: Vec<PoResult>,
    pub ledger_lines: usize,
}

impl PipelineSummary {
    pub fn has_errors(&self) -> bool {
        self.results.iter().any(|r| r.error.is_some())
    }
}

/// The obligation text with free identifiers renamed to `v0, v1, ...`.
pub fn obfuscate(po: &ProofObligation) -> String {
    let mut idents: Vec<String> = po
        .hypotheses
        .iter()
        .map(|h| &h.formula)
        .chain(std::iter::once(&po.goal))
        .flat_map(free_identifiers)
        .collect();
    idents.sort();
    idents.dedup();
    let renaming: Binding = idents
        .iter()
        .enumerate()
        .map(|(i, id)| (id.clone(), Formula::ident(format!("v{i}"))))
        .collect();
    // A capture (a binder named like a fresh name) leaves that formula unrenamed.
    let rename = |f: &Formula| substitute(f, &renaming).unwrap_or_else(|_| f.clone());
    let hyps = po
        .hypotheses
        .iter()
        .enumerate()
        .map(|(i, h)| Hypothesis::new(h.origin, format!("h{i}"), rename(&h.formula)))
        .collect();
    ProofObligation::new("po", "m", "p", hyps, rename(&po.goal)).to_text()
}

/// Result of one obligation plus the attempt records to append.
pub struct Processed {
    pub result: PoResult,
    pub attempts: Vec<AttemptRecord>,
}

/// Selects hypotheses, injects the selected lemma instances, translates and
/// proves one obligation.
pub fn process_obligation(po: &ProofObligation, store: &LemmaStore, cfg: &ProveOptions) -> Processed {
    let start = Instant::now();
    let mut result = PoResult {
        po_id: po.id.clone(),
        verdict: None,
        prover: None,
        lemmas: Vec::new(),
        ms: 0,
        error: None,
    };
    let mut attempts = Vec::new();
    let fail = |mut result: PoResult, attempts, message: String| {
        result.error = Some(message);
        result.ms = start.elapsed().as_millis() as u64;
        Processed { result, attempts }
    };

    let hyps = po.hypothesis_formulas();
    let lemmas = lemmas_in_scope(store, &po.machine, &po.project);
    let suggestions = suggest_lemmas(&po.goal, &hyps, &lemmas, &cfg.params);
    let instances: Vec<Formula> = suggestions.iter().map(|s| s.instance.clone()).collect();
    let selection = select(&po.goal, &hyps, &instances, &cfg.params);
    let injected: Vec<(String, Formula)> = selection
        .iter()
        .filter(|c| c.source == Source::Lemma)
        .map(|c| {
            let s = &suggestions[c.index];
            (s.lemma.name.clone(), s.instance.clone())
        })
        .collect();
    result.lemmas = injected.iter().map(|(n, _)| n.clone()).collect();
    result.lemmas.sort();
    result.lemmas.dedup();

    let sequent = match assemble_sequent(po, &selection, &injected) {
        Ok(s) => s,
        Err(e) => return fail(result, attempts, e.to_string()),
    };
    let theory = match translate_sequent(&sequent, &cfg.map) {
        Ok(t) => t,
        Err(e) => return fail(result, attempts, e.to_string()),
    };
    if let Some(dir) = &cfg.out_dir {
        let written = sequent
            .write_to_dir(dir)
            .and_then(|p| std::fs::write(p.with_extension("why"), &theory));
        if let Err(e) = written {
            return fail(result, attempts, format!("{}: {e}", dir.display()));
        }
    }

    let po_text = cfg.obfuscate.then(|| obfuscate(&sequent));
    let mut record = |prover: &str, verdict: Verdict, ms: u64| {
        attempts.push(AttemptRecord {
            ts: AttemptRecord::now_ts(),
            po_id: po.id.clone(),
            po_hash: AttemptRecord::hash_hex(po.hash),
            prover: prover.to_string(),
            params: cfg.params,
            n_hyps: sequent.hypotheses.len(),
            lemmas: result.lemmas.clone(),
            verdict,
            ms,
            po_text: po_text.clone(),
        });
    };

    if cfg.stub {
        let t = Instant::now();
        let verdict = stub_prove(&sequent);
        record(STUB_PROVER_ID, verdict, t.elapsed().as_millis() as u64);
        result.verdict = Some(verdict);
        result.prover = Some(STUB_PROVER_ID.to_string());
    } else {
        for prover in &cfg.provers {
            match run_prover(&theory, prover) {
                Ok(run) => {
                    record(&prover.id, run.verdict, run.duration.as_millis() as u64);
                    result.verdict = Some(run.verdict);
                    result.prover = Some(prover.id.clone());
                    if run.verdict == Verdict::Valid {
                        break;
                    }
                }
                Err(e) => return fail(result, attempts, format!("prover {}: {e}", prover.id)),
            }
        }
    }
    result.ms = start.elapsed().as_millis() as u64;
    Processed { result, attempts }
}

/// Runs every obligation of the machine. Per-obligation failures are
/// reported in the summary; only setup failures abort.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineSummary, PipelineError> {
    if !cfg.options.stub && cfg.options.provers.is_empty() {
        return Err(PipelineError::NoProver);
    }
    cfg.options.params.validate()?;
    let text = std::fs::read_to_string(&cfg.machine).map_err(|source| PipelineError::Io {
        path: cfg.machine.clone(),
        source,
    })?;
    let model = parse_machine(&text).map_err(|source| PipelineError::Model {
        path: cfg.machine.clone(),
        source,
    })?;
    let store = match &cfg.store {
        Some(dir) => LemmaStore::load_dir(dir)?,
        None => LemmaStore::new(),
    };
    let pos = generate_inv_pos(&model);

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism)
        .build()
        .map_err(|e| PipelineError::Pool(e.to_string()))?;
    let processed: Vec<Processed> = pool.install(|| {
        pos.par_iter()
            .map(|po| process_obligation(po, &store, &cfg.options))
            .collect()
    });

    let mut summary = PipelineSummary::default();
    for p in processed {
        if let Some(path) = &cfg.ledger {
            for a in &p.attempts {
                record_attempt(path, a)?;
                summary.ledger_lines += 1;
            }
        }
        summary.results.push(p.result);
    }
    Ok(summary)
}
