use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use obsel_core::formula::{parse_with, Formula, ParseOptions};
use obsel_core::lemma::{lemmas_in_scope, suggest_lemmas, LemmaStore, SchematicLemma, Scope};
use obsel_core::obligation::{generate_inv_pos, parse_machine, ProofObligation};
use obsel_core::pipeline::{process_obligation, run_pipeline, PipelineConfig, ProveOptions};
use obsel_core::prover::{ledger_stats, record_attempt, translate_sequent, ProverConfig, TranslationMap, Verdict};
use obsel_core::shingle::profile;
use obsel_core::similarity::{select, ScoreParams, Source};

#[derive(Parser, Debug)]
#[command(
    name = "obsel",
    version,
    about = "Proof obligations, structural premise selection and prover runs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the depth and structure shingles of a formula.
    Shingle {
        /// File holding one formula.
        #[arg(required_unless_present = "expr")]
        file: Option<PathBuf>,
        /// Formula given inline instead of a file.
        #[arg(long, conflicts_with = "file")]
        expr: Option<String>,
        /// Shingle length.
        #[arg(long, default_value_t = obsel_core::shingle::DEFAULT_SHINGLE_SIZE)]
        n: usize,
        #[arg(long)]
        json: bool,
    },
    /// Rank hypotheses and lemma bodies against a goal.
    Select {
        /// File holding the goal formula.
        #[arg(long, required_unless_present = "po", conflicts_with = "po")]
        goal: Option<PathBuf>,
        /// File with one hypothesis formula per line.
        #[arg(long, conflicts_with = "po")]
        hyps: Option<PathBuf>,
        /// Obligation file supplying both goal and hypotheses.
        #[arg(long)]
        po: Option<PathBuf>,
        /// Lemma store whose statements join the candidate pool.
        #[arg(long)]
        lemmas: Option<PathBuf>,
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        json: bool,
    },
    /// Inspect a lemma store.
    Lemma {
        #[command(subcommand)]
        command: LemmaCommand,
    },
    /// Proof obligation generation.
    Po {
        #[command(subcommand)]
        command: PoCommand,
    },
    /// Print the theory text for an obligation file.
    Translate {
        po: PathBuf,
        /// Translation map file; the built-in map when absent.
        #[arg(long)]
        map: Option<PathBuf>,
    },
    /// Prove one obligation file. Exit 0 on Valid, 2 on Unknown, Invalid or Timeout.
    Prove {
        po: PathBuf,
        /// Prover config file (TOML).
        #[arg(long, required_unless_present = "stub", conflicts_with = "stub")]
        prover: Option<PathBuf>,
        /// Use the built-in stub prover.
        #[arg(long)]
        stub: bool,
        /// Lemma store directory.
        #[arg(long)]
        store: Option<PathBuf>,
        #[command(flatten)]
        params: ParamArgs,
        /// Append the attempt to this ledger file.
        #[arg(long)]
        ledger: Option<PathBuf>,
        #[arg(long)]
        map: Option<PathBuf>,
        /// Store the obligation with renamed identifiers in the ledger.
        #[arg(long)]
        obfuscate: bool,
        #[arg(long)]
        json: bool,
    },
    /// Generate, select, prove and record every obligation of a machine.
    Run {
        /// Machine file.
        #[arg(long)]
        machine: PathBuf,
        /// Lemma store directory.
        #[arg(long)]
        store: Option<PathBuf>,
        /// Use the built-in stub prover.
        #[arg(long, conflicts_with = "provers")]
        stub: bool,
        /// Comma-separated prover config files, tried in order.
        #[arg(long, value_delimiter = ',', required_unless_present = "stub")]
        provers: Vec<PathBuf>,
        #[arg(long)]
        ledger: Option<PathBuf>,
        /// Write each assembled obligation and its theory text here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        map: Option<PathBuf>,
        #[arg(long)]
        obfuscate: bool,
        /// Worker threads; 0 picks one per core.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        json: bool,
    },
    /// Attempt ledger queries.
    Ledger {
        #[command(subcommand)]
        command: LedgerCommand,
    },
}

#[derive(Subcommand, Debug)]
enum LemmaCommand {
    /// List the lemmas visible from a machine and project.
    List {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        machine: Option<String>,
        #[arg(long)]
        project: Option<String>,
    },
    /// Parse every lemma file and report errors.
    Check {
        #[arg(long)]
        store: PathBuf,
    },
    /// Match lemma triggers against a goal formula or obligation file.
    Match {
        #[arg(long)]
        goal: PathBuf,
        #[arg(long)]
        store: PathBuf,
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Subcommand, Debug)]
enum PoCommand {
    /// Generate invariant-preservation obligations for a machine file.
    Gen {
        machine: PathBuf,
        /// Write one `.po` file per obligation under this directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Subcommand, Debug)]
enum LedgerCommand {
    /// Success rates per prover and per injected lemma.
    Stats {
        ledger: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args, Debug, Clone)]
struct ParamArgs {
    /// Structure shingle weight.
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// Shingle length.
    #[arg(long, default_value_t = obsel_core::shingle::DEFAULT_SHINGLE_SIZE)]
    n: usize,
    /// Drop shingles occurring more often than this.
    #[arg(long, default_value_t = obsel_core::shingle::DEFAULT_PRUNE_THRESHOLD)]
    tau: u64,
    /// Keep at most this many shingles per kind.
    #[arg(long, default_value_t = 64)]
    k: usize,
    /// Minimum structural score.
    #[arg(long, default_value_t = 0.0)]
    theta: f64,
    /// Number of structural picks.
    #[arg(long, default_value_t = 50)]
    top: usize,
    /// Free-identifier closure rounds.
    #[arg(long, default_value_t = 1)]
    depth: usize,
    /// Disable count pruning and the per-kind cap.
    #[arg(long)]
    unpruned: bool,
}

impl ParamArgs {
    fn params(&self) -> Result<ScoreParams> {
        let p = ScoreParams {
            c: self.c,
            n: self.n,
            tau: self.tau,
            k: self.k,
            theta: self.theta,
            top: self.top,
            depth: self.depth,
        };
        let p = if self.unpruned { p.unpruned() } else { p };
        p.validate()?;
        Ok(p)
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_po(path: &Path) -> Result<ProofObligation> {
    ProofObligation::from_text(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn load_store(dir: Option<&Path>) -> Result<LemmaStore> {
    match dir {
        Some(d) => Ok(LemmaStore::load_dir(d)?),
        None => Ok(LemmaStore::new()),
    }
}

fn load_map(path: Option<&Path>) -> Result<TranslationMap> {
    match path {
        Some(p) => Ok(TranslationMap::parse(&read(p)?)?),
        None => Ok(TranslationMap::default_map()),
    }
}

fn print_json(v: &impl serde::Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn shingle(file: Option<PathBuf>, expr: Option<String>, n: usize, as_json: bool) -> Result<()> {
    let text = match (file, expr) {
        (Some(f), None) => read(&f)?,
        (None, Some(t)) => t,
        _ => bail!("give either a file or --expr"),
    };
    if !(2..=5).contains(&n) {
        bail!("shingle size must be between 2 and 5");
    }
    let f = parse_with(text.trim(), ParseOptions::PRIMED)?;
    let prof = profile(&f, n);
    if as_json {
        return print_json(&prof.to_json());
    }
    for (name, bag) in [("depth", &prof.depth), ("structure", &prof.structure)] {
        for (s, count) in bag {
            println!("{name}\t{s}\t{count}");
        }
    }
    Ok(())
}

fn parse_lines(path: &Path) -> Result<Vec<Formula>> {
    read(path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            parse_with(l.trim(), ParseOptions::PRIMED).with_context(|| format!("{}:{}", path.display(), i + 1))
        })
        .collect()
}

struct SelectInput {
    goal: PathBuf,
    hyps: Option<PathBuf>,
    po: Option<PathBuf>,
    lemmas: Option<PathBuf>,
}

fn select_cmd(input: SelectInput, params: &ScoreParams, as_json: bool) -> Result<()> {
    let (goal, hyps) = match &input.po {
        Some(p) => {
            let po = load_po(p)?;
            (po.goal.clone(), po.hypothesis_formulas())
        }
        None => {
            let goal = parse_with(read(&input.goal)?.trim(), ParseOptions::PRIMED)
                .with_context(|| format!("parsing {}", input.goal.display()))?;
            let hyps = match &input.hyps {
                Some(h) => parse_lines(h)?,
                None => Vec::new(),
            };
            (goal, hyps)
        }
    };
    let store = load_store(input.lemmas.as_deref())?;
    let bodies: Vec<Formula> = store.lemmas().iter().map(|l| l.statement.clone()).collect();
    let ranked = select(&goal, &hyps, &bodies, params);
    if as_json {
        return print_json(&ranked);
    }
    for c in &ranked {
        let (source, formula) = match c.source {
            Source::Hypothesis => ("hyp", hyps[c.index].to_string()),
            Source::Lemma => ("lemma", store.lemmas()[c.index].name.clone()),
        };
        println!("{:.6}\t{source}\t{}\t{:?}\t{formula}", c.score, c.index, c.via);
    }
    Ok(())
}

fn lemma_cmd(command: LemmaCommand) -> Result<()> {
    match command {
        LemmaCommand::List {
            store,
            machine,
            project,
        } => {
            let store = LemmaStore::load_dir(&store)?;
            let lemmas: Vec<&SchematicLemma> = match (machine, project) {
                (None, None) => store.lemmas().iter().collect(),
                (m, p) => lemmas_in_scope(&store, m.as_deref().unwrap_or(""), p.as_deref().unwrap_or("")),
            };
            for l in lemmas {
                println!("{}\t{}", l.name, l.scope);
            }
        }
        LemmaCommand::Check { store } => {
            let store = LemmaStore::load_dir(&store)?;
            println!("{} lemmas ok", store.len());
        }
        LemmaCommand::Match {
            goal,
            store,
            params,
            json: as_json,
        } => {
            let params = params.params()?;
            let store = LemmaStore::load_dir(&store)?;
            let text = read(&goal)?;
            let (goal, hyps, visible) = if text.trim_start().starts_with("po ") {
                let po = ProofObligation::from_text(&text)?;
                let visible = lemmas_in_scope(&store, &po.machine, &po.project);
                (po.goal.clone(), po.hypothesis_formulas(), visible)
            } else {
                let goal = parse_with(text.trim(), ParseOptions::PRIMED)?;
                let visible = store.lemmas().iter().filter(|l| l.scope == Scope::Global).collect();
                (goal, Vec::new(), visible)
            };
            let suggestions = suggest_lemmas(&goal, &hyps, &visible, &params);
            if as_json {
                let rows: Vec<_> = suggestions
                    .iter()
                    .map(|s| {
                        let binding: serde_json::Map<_, _> =
                            s.binding.iter().map(|(k, v)| (k.clone(), json!(v.to_string()))).collect();
                        json!({"lemma": s.lemma.name, "score": s.score, "binding": binding, "instance": s.instance.to_string()})
                    })
                    .collect();
                return print_json(&rows);
            }
            for s in suggestions {
                println!("{:.6}\t{}\t{}\t{}", s.score, s.lemma.name, s.binding, s.instance);
            }
        }
    }
    Ok(())
}

fn po_gen(machine: &Path, out: Option<&Path>, as_json: bool) -> Result<()> {
    let model = parse_machine(&read(machine)?).with_context(|| format!("parsing {}", machine.display()))?;
    let pos = generate_inv_pos(&model);
    if let Some(dir) = out {
        for po in &pos {
            let path = po
                .write_to_dir(dir)
                .with_context(|| format!("writing into {}", dir.display()))?;
            if !as_json {
                println!("{}", path.display());
            }
        }
    }
    if as_json {
        let rows: Vec<_> = pos
            .iter()
            .map(|po| {
                let hyps: Vec<_> = po
                    .hypotheses
                    .iter()
                    .map(|h| json!({"origin": h.origin, "label": h.label, "formula": h.formula.to_string()}))
                    .collect();
                json!({"id": po.id, "hash": format!("{:016x}", po.hash), "hypotheses": hyps, "goal": po.goal.to_string()})
            })
            .collect();
        return print_json(&rows);
    }
    if out.is_none() {
        for po in &pos {
            println!("{}", po.to_text());
        }
    }
    Ok(())
}

fn verdict_exit(v: Option<Verdict>) -> ExitCode {
    match v {
        Some(Verdict::Valid) => ExitCode::SUCCESS,
        Some(Verdict::Unknown | Verdict::Invalid | Verdict::Timeout) => ExitCode::from(2),
        Some(Verdict::ToolError) | None => ExitCode::from(1),
    }
}

fn main() -> ExitCode {
    // Exit quietly when the reader of stdout goes away (`obsel ... | head`).
    // SAFETY: called before any other thread exists.
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Shingle { file, expr, n, json } => shingle(file, expr, n, json)?,
        Command::Select {
            goal,
            hyps,
            po,
            lemmas,
            params,
            json,
        } => {
            let input = SelectInput {
                goal: goal.unwrap_or_default(),
                hyps,
                po,
                lemmas,
            };
            select_cmd(input, &params.params()?, json)?
        }
        Command::Lemma { command } => lemma_cmd(command)?,
        Command::Po {
            command: PoCommand::Gen { machine, out, json },
        } => po_gen(&machine, out.as_deref(), json)?,
        Command::Translate { po, map } => {
            print!("{}", translate_sequent(&load_po(&po)?, &load_map(map.as_deref())?)?);
        }
        Command::Prove {
            po,
            prover,
            stub,
            store,
            params,
            ledger,
            map,
            obfuscate,
            json: as_json,
        } => {
            let po = load_po(&po)?;
            let store = load_store(store.as_deref())?;
            let options = ProveOptions {
                params: params.params()?,
                provers: prover.iter().map(|p| ProverConfig::load(p)).collect::<Result<_, _>>()?,
                stub,
                out_dir: None,
                obfuscate,
                map: load_map(map.as_deref())?,
            };
            let processed = process_obligation(&po, &store, &options);
            if let Some(path) = &ledger {
                for a in &processed.attempts {
                    record_attempt(path, a)?;
                }
            }
            let r = &processed.result;
            if let Some(e) = &r.error {
                bail!("{}: {e}", r.po_id);
            }
            if as_json {
                print_json(r)?;
            } else {
                let verdict = r.verdict.map_or("none".to_string(), |v| v.to_string());
                println!("{}\t{}\t{}", r.po_id, verdict, r.lemmas.join(","));
            }
            return Ok(verdict_exit(r.verdict));
        }
        Command::Run {
            machine,
            store,
            stub,
            provers,
            ledger,
            out,
            map,
            obfuscate,
            jobs,
            params,
            json: as_json,
        } => {
            let mut cfg = PipelineConfig::new(machine);
            cfg.store = store;
            cfg.ledger = ledger;
            cfg.parallelism = jobs;
            cfg.options = ProveOptions {
                params: params.params()?,
                provers: provers
                    .iter()
                    .map(|p| ProverConfig::load(p))
                    .collect::<Result<_, _>>()?,
                stub,
                out_dir: out,
                obfuscate,
                map: load_map(map.as_deref())?,
            };
            let summary = run_pipeline(&cfg)?;
            if as_json {
                print_json(&summary.results)?;
            } else {
                for r in &summary.results {
                    let verdict = r.verdict.map_or("none".to_string(), |v| v.to_string());
                    println!(
                        "{}\t{}\t{}\t{}\t{}ms",
                        r.po_id,
                        verdict,
                        r.prover.as_deref().unwrap_or("-"),
                        r.lemmas.join(","),
                        r.ms
                    );
                }
            }
            for r in &summary.results {
                if let Some(e) = &r.error {
                    eprintln!("error: {}: {e}", r.po_id);
                }
            }
            if summary.has_errors() {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Ledger {
            command: LedgerCommand::Stats { ledger, json },
        } => {
            let stats = ledger_stats(&ledger)?;
            if json {
                print_json(&stats)?;
            } else {
                println!("records\t{}", stats.records);
                for (group, table) in [("prover", &stats.by_prover), ("lemma", &stats.by_lemma)] {
                    for (name, a) in table {
                        println!(
                            "{group}\t{name}\t{}/{}\t{:.4}\t{}ms",
                            a.valid,
                            a.attempts,
                            a.success_rate(),
                            a.total_ms
                        );
                    }
                }
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
