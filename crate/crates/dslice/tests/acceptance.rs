//! Acceptance run over generated programs and the bundled corpus.
//!
//! Prints one `criterion N: PASS|FAIL` line per criterion, followed by
//! informational lines. Exits nonzero when a criterion fails that is not
//! listed in `KNOWN_RED`.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use dslice::corpus::{load_dir, CorpusProgram};
use dslice::criteria::{program_seed, select};
use dslice::gen::{generate, GenConfig};
use dslice::inputs::random_inputs;
use dslice::pipeline::{prepare, Prepared};
use dslice::stats::{corpus_stats, MAX_CRITERIA};
use dslice_core::cdeps::ControlDeps;
use dslice_core::cfg::{build_cfg, Branch, Cfg, NodeId};
use dslice_core::lang::{parse_program, walk, Location, Program};
use dslice_core::oracle::{check_backward, check_data, vi_oracle, DataBudgets, Verdict};
use dslice_core::slice::{backward_slice, compute_cvi, compute_cvi_with, control_slice, data_slice, AbstractionMode};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria that fail for reasons recorded in the README: SP1 does not
/// hold once a `break`/`continue` sits two conditions deep in a loop.
const KNOWN_RED: &[u32] = &[8];

const SEED: u64 = 0;
const STANDARD_PROGRAMS: usize = 200;
const SMALL_PROGRAMS: usize = 100;
const CRITERIA_PER_PROGRAM: usize = 3;
const CORPUS_INPUTS: usize = 20;
const DATA_INPUTS: usize = 10;
const STEPS: usize = 10_000;
const TIMING_REPS: u32 = 50;
const SHUFFLES: u64 = 5;

struct Line {
    id: u32,
    pass: bool,
    detail: String,
}

fn corpus() -> Vec<CorpusProgram> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus");
    let corpus = load_dir(&dir).expect("bundled corpus loads");
    assert_eq!(corpus.len(), 20, "bundled corpus has 20 programs");
    corpus
}

/// Corpus criteria, prepared, tagged with their program and location.
fn corpus_criteria(corpus: &[CorpusProgram]) -> Vec<(String, Prepared)> {
    corpus
        .iter()
        .flat_map(|cp| {
            select(&cp.program, &cp.id, SEED, MAX_CRITERIA).into_iter().map(move |c| {
                let prep = prepare(&cp.program, c.at, c.vars.iter().cloned()).expect("corpus criterion prepares");
                let at = match c.at {
                    Location::After(l) => format!("after@{}", l.0),
                    Location::Before(l) => format!("@{}", l.0),
                    Location::End => "end".into(),
                    Location::Line(n) => format!("line {n}"),
                };
                (format!("{} {at}", cp.id), prep)
            })
        })
        .collect()
}

fn inputs_for(prep: &Prepared, id: &str, n: usize) -> Vec<dslice_core::interp::Input> {
    let mut rng = ChaCha8Rng::seed_from_u64(program_seed(SEED, id));
    random_inputs(&mut rng, &prep.program.globals(), n, -5, 10)
}

fn generated(cfg: GenConfig, n: usize, seed: u64) -> Vec<Program> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| parse_program(&generate(&mut rng, cfg)).expect("generated program parses")).collect()
}

/// Random criteria: a statement of `p` or its end, observing a nonempty
/// subset of its variables.
fn random_criteria(p: &Program, rng: &mut impl Rng, n: usize) -> Vec<Prepared> {
    let mut labels = Vec::new();
    walk(&p.entry_procedure().body, &mut |s| labels.push(s.label));
    let globals: Vec<String> = p.globals().into_iter().collect();
    (0..n)
        .map(|_| {
            let i = rng.random_range(0..=labels.len());
            let at = if i == labels.len() { Location::End } else { Location::Before(labels[i]) };
            let k = rng.random_range(1..=globals.len().max(1));
            let vars: Vec<String> = globals.choose_multiple(rng, k).cloned().collect();
            prepare(p, at, vars).expect("generated criterion prepares")
        })
        .collect()
}

fn criterion1(programs: &[Program]) -> Line {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 1);
    let (mut checked, mut violations) = (0, Vec::new());
    for (i, p) in programs.iter().enumerate() {
        for prep in random_criteria(p, &mut rng, CRITERIA_PER_PROGRAM) {
            let (pdg, c) = (&prep.pdg, &prep.criterion);
            let bs = backward_slice(pdg, c).retained;
            let mut ok = control_slice(pdg, c).retained.is_subset(&bs) && compute_cvi(pdg, c).is_subset(&bs);
            for mode in [AbstractionMode::Cond, AbstractionMode::Assign] {
                ok &= data_slice(pdg, c, mode).retained.is_subset(&bs);
            }
            checked += 1;
            if !ok {
                violations.push(format!("program {i} at {}", c.location.0));
            }
        }
    }
    let elapsed = start.elapsed();
    Line {
        id: 1,
        pass: programs.len() >= STANDARD_PROGRAMS && violations.is_empty() && elapsed < Duration::from_secs(60),
        detail: format!(
            "{} programs, {checked} criteria, {} subset violations {:?}, {:.1}s (limit 60s)",
            programs.len(),
            violations.len(),
            violations,
            elapsed.as_secs_f64()
        ),
    }
}

fn criterion2(programs: &[Program]) -> Line {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 2);
    let (mut checked, mut violations, mut errors) = (0, Vec::new(), 0);
    let (mut gap, mut cvi_total) = (0, 0);
    for (i, p) in programs.iter().enumerate() {
        for prep in random_criteria(p, &mut rng, CRITERIA_PER_PROGRAM) {
            let (pdg, c) = (&prep.pdg, &prep.criterion);
            let cvi = compute_cvi(pdg, c);
            match vi_oracle(pdg.cfg(), pdg.reaching(), c, 64) {
                Ok(vi) => {
                    if !vi.is_subset(&cvi) {
                        violations.push(format!("program {i} at {}", c.location.0));
                    }
                    gap += cvi.difference(&vi).count();
                }
                Err(_) => errors += 1,
            }
            cvi_total += cvi.len();
            checked += 1;
        }
    }
    let elapsed = start.elapsed();
    Line {
        id: 2,
        pass: programs.len() >= SMALL_PROGRAMS && violations.is_empty() && errors == 0 && elapsed < Duration::from_secs(120),
        detail: format!(
            "{} programs, {checked} criteria, {} VI not in CVI {:?}, {errors} path-bound errors, gap |CVI \\ VI| = {gap} of {cvi_total} CVI statements, {:.1}s (limit 120s)",
            programs.len(),
            violations.len(),
            violations,
            elapsed.as_secs_f64()
        ),
    }
}

fn criterion3(criteria: &[(String, Prepared)]) -> Line {
    let (mut runs, mut skipped, mut failures) = (0, 0, Vec::new());
    for (id, prep) in criteria {
        let s = backward_slice(&prep.pdg, &prep.criterion);
        let r = check_backward(&prep.program, &s, &inputs_for(prep, id, CORPUS_INPUTS), STEPS).expect("slice builds");
        runs += r.checked;
        skipped += r.skipped.len() + r.original_faults.len();
        if !r.failures.is_empty() {
            failures.push(format!("{id}: {} inputs", r.failures.len()));
        }
    }
    Line {
        id: 3,
        pass: failures.is_empty() && runs > 0,
        detail: format!(
            "{} criteria x {CORPUS_INPUTS} inputs, {runs} compared, {skipped} skipped (no termination or fault), failures {:?}",
            criteria.len(),
            failures
        ),
    }
}

fn criterion4(criteria: &[(String, Prepared)]) -> Line {
    let budgets = DataBudgets::default();
    let (mut checks, mut failures, mut inconclusive) = (0, Vec::new(), Vec::new());
    for (id, prep) in criteria {
        let inputs = inputs_for(prep, id, DATA_INPUTS);
        for mode in [AbstractionMode::Cond, AbstractionMode::Assign] {
            let d = data_slice(&prep.pdg, &prep.criterion, mode);
            let r = check_data(&prep.program, &d, &inputs, &budgets).expect("slice builds");
            checks += 1;
            let tag = format!("{id} {mode:?}");
            match r.verdict() {
                Verdict::Pass => {}
                Verdict::Inconclusive => inconclusive.push(tag),
                Verdict::Fail => failures.push(format!("{tag} (P2 {}, P3 {})", r.p2(), r.p3())),
            }
        }
    }
    let rate = inconclusive.len() as f64 / checks.max(1) as f64;
    Line {
        id: 4,
        pass: failures.is_empty() && rate < 0.05,
        detail: format!(
            "{checks} checks (criterion x mode, {DATA_INPUTS} inputs, branch budget {}), failures {:?}, inconclusive {:.1}% (limit 5%) {:?}",
            budgets.branch_budget,
            failures,
            100.0 * rate,
            inconclusive
        ),
    }
}

fn criterion5(corpus: &[CorpusProgram]) -> Line {
    let o = corpus_stats(corpus, SEED).expect("stats").overall().expect("nonempty corpus");
    let pass = o.ds <= 0.75 * o.bs && (o.cs - o.bs).abs() <= 0.2 * o.bs;
    Line {
        id: 5,
        pass,
        detail: format!(
            "{} slices, mean BS {:.2}, DS {:.2} ({:.2} x BS, limit 0.75), CS {:.2} ({:.2} x BS, limit 0.80..1.20)",
            o.slices,
            o.bs,
            o.ds,
            o.ds / o.bs,
            o.cs,
            o.cs / o.bs
        ),
    }
}

fn median(mut xs: Vec<Duration>) -> Duration {
    xs.sort();
    let n = xs.len();
    if n == 0 {
        Duration::ZERO
    } else if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2
    }
}

fn criterion6(criteria: &[(String, Prepared)]) -> Line {
    let per_call = |f: &dyn Fn()| {
        let start = Instant::now();
        for _ in 0..TIMING_REPS {
            f();
        }
        start.elapsed() / TIMING_REPS
    };
    let (mut bs, mut ds) = (Vec::new(), Vec::new());
    for (_, prep) in criteria {
        let (pdg, c) = (&prep.pdg, &prep.criterion);
        bs.push(per_call(&|| drop(std::hint::black_box(backward_slice(pdg, c)))));
        ds.push(per_call(&|| drop(std::hint::black_box(data_slice(pdg, c, AbstractionMode::Cond)))));
    }
    let (mb, md) = (median(bs), median(ds));
    Line {
        id: 6,
        pass: md <= 2 * mb,
        detail: format!(
            "median backward {:.1}us, median data {:.1}us ({:.2} x, limit 2), prebuilt PDG, {TIMING_REPS} repetitions",
            mb.as_secs_f64() * 1e6,
            md.as_secs_f64() * 1e6,
            md.as_secs_f64() / mb.as_secs_f64()
        ),
    }
}

fn criterion7(criteria: &[(String, Prepared)]) -> Line {
    let mut differing = Vec::new();
    for (id, prep) in criteria {
        let base = compute_cvi(&prep.pdg, &prep.criterion);
        for k in 0..SHUFFLES {
            let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ (k + 7));
            if compute_cvi_with(&prep.pdg, &prep.criterion, |n| rng.random_range(0..n)) != base {
                differing.push(format!("{id} order {k}"));
            }
        }
    }
    Line {
        id: 7,
        pass: differing.is_empty(),
        detail: format!("{} criteria x {SHUFFLES} shuffled orders, differing {:?}", criteria.len(), differing),
    }
}

/// Loop-free paths from `from` to `to` not passing through `banned`, at
/// most `limit` of them.
fn simple_paths(g: &Cfg, from: NodeId, to: NodeId, banned: NodeId, limit: usize) -> usize {
    fn go(g: &Cfg, n: NodeId, to: NodeId, path: &mut Vec<NodeId>, found: &mut usize, limit: usize) {
        if *found >= limit {
            return;
        }
        if n == to {
            *found += 1;
            return;
        }
        path.push(n);
        for e in g.out_edges(n).filter(|e| !e.special) {
            if !path.contains(&e.dst) {
                go(g, e.dst, to, path, found, limit);
            }
        }
        path.pop();
    }
    let mut found = 0;
    go(g, from, to, &mut vec![banned], &mut found, limit);
    found
}

#[derive(Default)]
struct SpCounts {
    cfgs: usize,
    sp2_cfgs: usize,
    sp1: usize,
    sp2: usize,
    sp1_programs: usize,
}

fn structural(programs: &[&Program]) -> SpCounts {
    let mut n = SpCounts::default();
    for p in programs {
        let g = build_cfg(p);
        let cd = ControlDeps::compute(&g);
        let small = g.len() <= 15;
        n.cfgs += 1;
        n.sp2_cfgs += usize::from(small);
        let before = n.sp1;
        for s in g.statement_ids() {
            for &(c, f) in cd.tcntrls_flags(s) {
                if f.has(Branch::True, true) && f.has(Branch::False, true) {
                    n.sp1 += 1;
                }
                for e in Branch::BOTH {
                    if small && f.has(e, true) {
                        let other = g.branch_target(c, e.opposite()).expect("conditions have both edges");
                        n.sp2 += usize::from(simple_paths(&g, other, s, c, 1) > 0);
                    }
                }
            }
        }
        n.sp1_programs += usize::from(n.sp1 > before);
    }
    n
}

fn criterion8(programs: &[&Program]) -> Line {
    let n = structural(programs);
    Line {
        id: 8,
        pass: n.sp1 == 0 && n.sp2 == 0,
        detail: format!(
            "{} CFGs: SP1 violations {} (in {} programs); {} CFGs of at most 15 nodes: SP2 violations {}",
            n.cfgs, n.sp1, n.sp1_programs, n.sp2_cfgs, n.sp2
        ),
    }
}

fn main() -> ExitCode {
    let standard = generated(GenConfig::STANDARD, STANDARD_PROGRAMS, SEED ^ 0x51);
    let small = generated(GenConfig::SMALL, SMALL_PROGRAMS, SEED ^ 0x52);
    let corpus = corpus();
    let criteria = corpus_criteria(&corpus);
    let all: Vec<&Program> = standard.iter().chain(&small).collect();

    let lines = [
        criterion1(&standard),
        criterion2(&small),
        criterion3(&criteria),
        criterion4(&criteria),
        criterion5(&corpus),
        criterion6(&criteria),
        criterion7(&criteria),
        criterion8(&all),
    ];
    let mut unexpected = BTreeSet::new();
    for l in &lines {
        let known = if !l.pass && KNOWN_RED.contains(&l.id) { " (known)" } else { "" };
        println!("criterion {}: {}{known} {}", l.id, if l.pass { "PASS" } else { "FAIL" }, l.detail);
        if !l.pass && !KNOWN_RED.contains(&l.id) {
            unexpected.insert(l.id);
        }
    }

    let jump_free = |c: GenConfig| GenConfig { jumps: false, ..c };
    let plain_standard = generated(jump_free(GenConfig::STANDARD), STANDARD_PROGRAMS, SEED ^ 0x53);
    let plain_small = generated(jump_free(GenConfig::SMALL), SMALL_PROGRAMS, SEED ^ 0x54);
    let plain: Vec<&Program> = plain_standard.iter().chain(&plain_small).collect();
    let n = structural(&plain);
    println!(
        "info: without break/continue: {} CFGs, SP1 violations {}; {} CFGs of at most 15 nodes, SP2 violations {}",
        n.cfgs, n.sp1, n.sp2_cfgs, n.sp2
    );

    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected failures: {unexpected:?}");
        ExitCode::FAILURE
    }
}
