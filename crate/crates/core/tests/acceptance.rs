//! Acceptance suite: prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use common::{balanced_tree, oracle, Gen};
use obsel_core::formula::{parse_formula, parse_with, print_formula, Formula, Kind, ParseOptions};
use obsel_core::lemma::{lemmas_in_scope, LemmaStore, SchematicLemma, Scope};
use obsel_core::obligation::{generate_inv_pos, parse_machine, Hypothesis, Origin, ProofObligation};
use obsel_core::pipeline::{run_pipeline, PipelineConfig};
use obsel_core::prover::{
    ledger_stats, read_ledger, record_attempt, sequent_kinds, stub_prove, translate_sequent, Aggregate, AttemptRecord,
    TranslationMap, Verdict,
};
use obsel_core::shingle::{profile, Shingle, ShingleKind};
use obsel_core::similarity::{jaccard_ratio, select, sequence_shingles, ScoreParams, ScoredPool, Source};
use rand::Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn median(mut xs: Vec<Duration>) -> Duration {
    xs.sort();
    xs[xs.len() / 2]
}

fn shingle_fixture() -> Outcome {
    use Kind::{Add, Div, Mul, Sub};
    let text = "a*(b+c/d)+e*(f-d*2)";
    let start = Instant::now();
    let p = profile(&parse_formula(text).map_err(|e| e.to_string())?, 3);
    let elapsed = start.elapsed();
    let depth: BTreeSet<Shingle> = p.depth.keys().cloned().collect();
    let structure: BTreeSet<Shingle> = p.structure.keys().cloned().collect();
    let want_depth: BTreeSet<Shingle> = [[Mul, Add, Div], [Add, Mul, Add], [Add, Mul, Sub], [Mul, Sub, Mul]]
        .iter()
        .map(|l| Shingle::new(ShingleKind::Depth, l))
        .collect();
    let want_structure: BTreeSet<Shingle> = [Shingle::new(ShingleKind::Structure, &[Add, Mul, Mul])].into();
    ensure(depth == want_depth, || format!("depth shingles {depth:?}"))?;
    ensure(structure == want_structure, || {
        format!("structure shingles {structure:?}")
    })?;
    ensure(elapsed < Duration::from_millis(1), || format!("took {elapsed:?}"))?;
    Ok(format!("4 depth + 1 structure shingles exact in {elapsed:?}"))
}

fn jaccard_claim() -> Outcome {
    let abcd = sequence_shingles(&['a', 'b', 'c', 'd'], 3);
    let abcde = sequence_shingles(&['a', 'b', 'c', 'd', 'e'], 3);
    let dcba = sequence_shingles(&['d', 'c', 'b', 'a'], 3);
    let near = jaccard_ratio(&abcd, &abcde).map_err(|e| e.to_string())?;
    let far = jaccard_ratio(&abcd, &dcba).map_err(|e| e.to_string())?;
    // a/b == 2/3 and a/b == 0 as exact rationals.
    ensure(near.0 * 3 == near.1 * 2, || format!("near = {}/{}", near.0, near.1))?;
    ensure(far.0 == 0 && far.1 > 0, || format!("far = {}/{}", far.0, far.1))?;
    Ok(format!("{}/{} > {}/{}", near.0, near.1, far.0, far.1))
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut checks = 0;
    for pool_no in 0..200u64 {
        let mut g = Gen::new(0x5eed_0000 + pool_no);
        let size = g.rng.gen_range(1..=30);
        let split = g.rng.gen_range(0..=size);
        let max_depth = |g: &mut Gen| g.rng.gen_range(2..=6);
        let formulas: Vec<Formula> = (0..size)
            .map(|_| {
                let d = max_depth(&mut g);
                g.formula(d)
            })
            .collect();
        let d = max_depth(&mut g);
        let goal = g.formula(d);
        let hyps = &formulas[..split];
        let lemmas = &formulas[split..];
        let n = g.rng.gen_range(2..=4);
        let theta = if g.rng.gen_bool(0.5) {
            0.0
        } else {
            g.rng.gen_range(0.0..2.0)
        };
        let top = g.rng.gen_range(1..=30);
        let rounds = g.rng.gen_range(0..=2);
        for c in [0.5, 1.0, 2.0] {
            let params = ScoreParams {
                c,
                n,
                theta,
                top,
                depth: rounds,
                ..ScoreParams::default()
            }
            .unpruned();
            let all: Vec<&Formula> = formulas.iter().collect();
            let scored = ScoredPool::new(&goal, &all, &params);
            let bags: Vec<oracle::Bag> = formulas.iter().map(|f| oracle::bag(f, n)).collect();
            let counts = oracle::pool_counts(&bags);
            let goal_bag = oracle::bag(&goal, n);
            for (i, b) in bags.iter().enumerate() {
                let want = oracle::score(&goal_bag, b, &counts, c);
                let got = scored.scores[i];
                ensure((want - got).abs() <= 1e-12, || {
                    format!("pool {pool_no} c={c} candidate {i}: {got} vs oracle {want}")
                })?;
            }
            let got: Vec<(usize, f64)> = select(&goal, hyps, lemmas, &params)
                .into_iter()
                .map(|r| match r.source {
                    Source::Hypothesis => (r.index, r.score),
                    Source::Lemma => (split + r.index, r.score),
                })
                .collect();
            let want = oracle::select(&goal, hyps, lemmas, &params);
            let got_order: Vec<usize> = got.iter().map(|x| x.0).collect();
            let want_order: Vec<usize> = want.iter().map(|x| x.0).collect();
            ensure(got_order == want_order, || {
                format!("pool {pool_no} c={c}: ranking {got_order:?} vs oracle {want_order:?}")
            })?;
            for (a, b) in got.iter().zip(&want) {
                ensure((a.1 - b.1).abs() <= 1e-12, || {
                    format!("pool {pool_no}: selected score {a:?} vs {b:?}")
                })?;
            }
            checks += 1;
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(30), || format!("took {elapsed:?}"))?;
    Ok(format!("{checks} pool/coefficient checks agree in {elapsed:?}"))
}

fn library_end_to_end() -> Outcome {
    let run = |store: Option<PathBuf>| -> Result<Vec<Verdict>, String> {
        let mut cfg = PipelineConfig::new(fixture("library.machine"));
        cfg.store = store;
        cfg.options.stub = true;
        let summary = run_pipeline(&cfg).map_err(|e| e.to_string())?;
        summary
            .results
            .iter()
            .map(|r| r.verdict.ok_or_else(|| format!("{}: {:?}", r.po_id, r.error)))
            .collect()
    };
    let with = run(Some(fixture("lemmas")))?;
    let without = run(None)?;
    ensure(!with.is_empty() && with.iter().all(|v| *v == Verdict::Valid), || {
        format!("with lemma: {with:?}")
    })?;
    ensure(without.iter().all(|v| *v == Verdict::Unknown), || {
        format!("without lemma: {without:?}")
    })?;
    Ok(format!("with lemma {with:?}, without {without:?}"))
}

fn scope_matrix() -> Outcome {
    let lemma = |name: &str, scope: Scope| {
        let trigger = parse_with("?x : NAT", ParseOptions::PATTERN).unwrap();
        SchematicLemma::new(name, scope, vec![], trigger, parse_formula("1 = 1").unwrap()).unwrap()
    };
    let mut store = LemmaStore::new();
    store.insert(lemma("M", Scope::Machine("m1".into()))).unwrap();
    store.insert(lemma("P", Scope::Project("proj1".into()))).unwrap();
    store.insert(lemma("G", Scope::Global)).unwrap();
    let expected: [(&str, &str, &[&str]); 6] = [
        ("m1", "proj1", &["G", "P", "M"]),
        ("m1", "proj2", &["G", "M"]),
        ("m2", "proj1", &["G", "P"]),
        ("m2", "proj2", &["G"]),
        ("m3", "proj1", &["G", "P"]),
        ("m3", "proj2", &["G"]),
    ];
    for (m, p, want) in expected {
        let got: Vec<&str> = lemmas_in_scope(&store, m, p).iter().map(|l| l.name.as_str()).collect();
        ensure(got == want, || format!("({m}, {p}) -> {got:?}, expected {want:?}"))?;
    }
    Ok("6 queries over 3 machines x 2 projects".into())
}

fn round_trip() -> Outcome {
    let mut g = Gen::new(0xa11ce);
    for i in 0..1000 {
        let depth = g.rng.gen_range(1..=8);
        let f = g.formula(depth);
        ensure(f.depth() <= 8, || format!("generator exceeded depth: {}", f.depth()))?;
        let text = print_formula(&f);
        let back = parse_formula(&text).map_err(|e| format!("#{i} `{text}`: {e}"))?;
        ensure(back == f, || {
            format!("#{i} `{text}` reparsed as `{}`", print_formula(&back))
        })?;
    }
    Ok("1000 formulas, 0 failures".into())
}

fn translator() -> Outcome {
    let map = TranslationMap::default_map();
    let text = std::fs::read_to_string(fixture("library.machine")).map_err(|e| e.to_string())?;
    let model = parse_machine(&text).map_err(|e| e.to_string())?;
    let pos = generate_inv_pos(&model);
    let po = pos.first().ok_or("no obligations")?;
    let out = translate_sequent(po, &map).map_err(|e| e.to_string())?;
    let golden = std::fs::read_to_string(fixture("library_inv1.why")).map_err(|e| e.to_string())?;
    ensure(out == golden, || format!("golden mismatch:\n{out}"))?;
    ensure(translate_sequent(po, &map).unwrap() == out, || {
        "non-deterministic output".into()
    })?;

    let mut g = Gen::new(0x7a11);
    for i in 0..100 {
        let n_hyps = g.rng.gen_range(0..=6);
        let hyps = (0..n_hyps)
            .map(|h| {
                let d = g.rng.gen_range(2..=6);
                Hypothesis::new(Origin::Guard, format!("g{h}"), g.predicate(d))
            })
            .collect();
        let d = g.rng.gen_range(2..=6);
        let po = ProofObligation::new(format!("rand/e/i{i}/INV"), "rand", "rand", hyps, g.predicate(d));
        let out = translate_sequent(&po, &map).map_err(|e| format!("random PO {i}: {e}"))?;
        let kinds: BTreeSet<Kind> = po
            .hypotheses
            .iter()
            .map(|h| &h.formula)
            .chain([&po.goal])
            .flat_map(|f| {
                let mut stack = vec![f];
                let mut ks = Vec::new();
                while let Some(x) = stack.pop() {
                    ks.push(x.kind());
                    stack.extend(x.children());
                }
                ks
            })
            .collect();
        ensure(kinds == sequent_kinds(&po), || {
            format!("random PO {i}: kind sets differ")
        })?;
        let want: BTreeSet<&str> = map
            .blocks
            .iter()
            .filter(|b| b.supports.iter().any(|k| kinds.contains(k)))
            .map(|b| b.name.as_str())
            .collect();
        let got: BTreeSet<&str> = map
            .blocks
            .iter()
            .filter(|b| out.contains(&b.text))
            .map(|b| b.name.as_str())
            .collect();
        ensure(got == want, || {
            format!("random PO {i}: blocks {got:?}, expected {want:?}")
        })?;
    }
    Ok("golden output identical; 100 random POs with minimal preludes".into())
}

fn invalid_corpus() -> Outcome {
    let mut g = Gen::new(0xbad);
    let mut valid = Vec::new();
    let sets = [("S", "T"), ("BOOKS", "NAT"), ("A", "B")];
    let funs = ["f", "library", "g"];
    let elems = [("x", "y"), ("b", "n"), ("p", "q")];
    for i in 0..50 {
        let (s, t) = sets[g.rng.gen_range(0..sets.len())];
        let f = funs[g.rng.gen_range(0..funs.len())];
        let (x, y) = elems[g.rng.gen_range(0..elems.len())];
        let fresh = format!("fresh{i}");
        let lemma = format!("!h. h : {s} --> {t} => (!u,v. u : {s} & v : {t} => h <+ {{u |-> v}} : {s} --> {t})");
        let hyps = [
            format!("{f} : {s} --> {t}"),
            format!("{x} : {s}"),
            format!("{y} : {t}"),
            format!("{f}' = {f} <+ {{{x} |-> {y}}}"),
            lemma.clone(),
        ];
        let goal = match i % 10 {
            0 => format!("{fresh} : {s}"),
            1 => format!("{fresh} = {x}"),
            2 => format!("{f} <+ {{{x} |-> {fresh}}} : {s} --> {t}"),
            3 => format!("{f}' = {f} <+ {{{x} |-> {fresh}}}"),
            4 => format!("{f}' : {s} --> {fresh}"),
            5 => format!("{fresh} : {t} & {x} : {s}"),
            6 => format!("not({x} : {s})"),
            7 => format!("not({f} : {s} --> {t})"),
            8 => format!("not({f}' = {f} <+ {{{x} |-> {y}}})"),
            _ => format!("not({lemma})"),
        };
        let parse = |s: &str| parse_with(s, ParseOptions::PRIMED).map_err(|e| format!("`{s}`: {e}"));
        let hyps = hyps
            .iter()
            .enumerate()
            .map(|(k, h)| Ok(Hypothesis::new(Origin::Guard, format!("h{k}"), parse(h)?)))
            .collect::<Result<Vec<_>, String>>()?;
        let po = ProofObligation::new(format!("bad/{i}"), "bad", "bad", hyps, parse(&goal)?);
        if stub_prove(&po) == Verdict::Valid {
            valid.push(goal);
        }
    }
    ensure(valid.is_empty(), || format!("Valid on invalid sequents: {valid:?}"))?;
    Ok("50 invalid sequents, 0 Valid".into())
}

fn ledger() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("ledger.jsonl");
    std::thread::scope(|s| {
        for w in 0..8 {
            let path = &path;
            s.spawn(move || {
                for r in 0..100 {
                    let rec = AttemptRecord {
                        ts: AttemptRecord::now_ts(),
                        po_id: format!("w{w}/r{r}"),
                        po_hash: AttemptRecord::hash_hex(w * 1000 + r),
                        prover: format!("writer{w}"),
                        params: ScoreParams::default(),
                        n_hyps: r as usize,
                        lemmas: vec!["override_tfun".into(); (r % 3) as usize],
                        verdict: Verdict::Unknown,
                        ms: r,
                        po_text: Some("x".repeat(512)),
                    };
                    record_attempt(path, &rec).expect("append");
                }
            });
        }
    });
    let text = std::fs::read_to_string(&path).map_err(|e| e.to_string())?;
    let lines: Vec<&str> = text.lines().collect();
    ensure(lines.len() == 800, || format!("{} lines", lines.len()))?;
    let mut ids = BTreeSet::new();
    for (i, line) in lines.iter().enumerate() {
        let rec: AttemptRecord = serde_json::from_str(line).map_err(|e| format!("line {}: {e}", i + 1))?;
        ids.insert(rec.po_id);
    }
    ensure(ids.len() == 800, || format!("{} distinct records", ids.len()))?;
    ensure(read_ledger(&path).map_err(|e| e.to_string())?.len() == 800, || {
        "read_ledger count".into()
    })?;

    let stats = ledger_stats(&fixture("ledger10.jsonl")).map_err(|e| e.to_string())?;
    let agg = |attempts, valid, verdicts: &[(Verdict, usize)], total_ms| Aggregate {
        attempts,
        valid,
        by_verdict: verdicts.iter().copied().collect(),
        total_ms,
    };
    use Verdict::{Invalid, Timeout, ToolError, Unknown, Valid};
    let by_prover: BTreeMap<String, Aggregate> = [
        (
            "alt-ergo".to_string(),
            agg(3, 1, &[(Valid, 1), (Unknown, 1), (Timeout, 1)], 5420),
        ),
        ("stub".to_string(), agg(4, 2, &[(Valid, 2), (Unknown, 2)], 11)),
        (
            "z3".to_string(),
            agg(3, 1, &[(Valid, 1), (Invalid, 1), (ToolError, 1)], 121),
        ),
    ]
    .into();
    let by_lemma: BTreeMap<String, Aggregate> = [
        ("dom_override".to_string(), agg(3, 1, &[(Valid, 1), (Unknown, 2)], 382)),
        ("override_tfun".to_string(), agg(4, 4, &[(Valid, 4)], 207)),
    ]
    .into();
    ensure(stats.records == 10, || format!("{} records", stats.records))?;
    ensure(stats.by_prover == by_prover, || {
        format!("by prover {:?}", stats.by_prover)
    })?;
    ensure(stats.by_lemma == by_lemma, || format!("by lemma {:?}", stats.by_lemma))?;
    let rate = stats.by_prover["alt-ergo"].success_rate();
    ensure(rate == 1.0 / 3.0, || format!("alt-ergo success rate {rate}"))?;
    Ok("800 intact lines from 8 writers; fixture aggregates match".into())
}

fn profile_scaling() -> Outcome {
    let small = balanced_tree(1001);
    let large = balanced_tree(10001);
    ensure(small.size() == 1001 && large.size() == 10001, || "tree sizes".into())?;
    let time = |f: &Formula| {
        let _ = profile(f, 3);
        median(
            (0..15)
                .map(|_| {
                    let start = Instant::now();
                    std::hint::black_box(profile(std::hint::black_box(f), 3));
                    start.elapsed()
                })
                .collect(),
        )
    };
    let t_small = time(&small);
    let t_large = time(&large);
    let ratio = t_large.as_secs_f64() / t_small.as_secs_f64();
    ensure(t_large < Duration::from_millis(50), || {
        format!("10k nodes took {t_large:?}")
    })?;
    ensure(ratio <= 12.0, || {
        format!("ratio {ratio:.2} ({t_small:?} vs {t_large:?})")
    })?;
    Ok(format!("1k: {t_small:?}, 10k: {t_large:?}, ratio {ratio:.2}"))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("shingle fixture", shingle_fixture),
        ("jaccard sequence claim", jaccard_claim),
        ("weighted score oracle", oracle_equivalence),
        ("library end to end", library_end_to_end),
        ("lemma scope matrix", scope_matrix),
        ("parse/print round trip", round_trip),
        ("translator golden + minimal prelude", translator),
        ("stub prover soundness", invalid_corpus),
        ("ledger concurrency + stats", ledger),
        ("profile scaling", profile_scaling),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS criterion {}: {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {}: {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
