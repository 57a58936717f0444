use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use dslice::corpus::{load_dir, read_program};
use dslice::inputs::{random_inputs, read_inputs};
use dslice::pipeline::{emit_slice, parse_vars, prepare, slice, LabelsJson, Prepared};
use dslice::stats::corpus_stats;
use dslice_core::cdeps::Strength;
use dslice_core::lang::{inline_calls, parse_program, Label};
use dslice_core::oracle::{check_backward_program, check_data_program, DataBudgets, Verdict};
use dslice_core::pdg::Pdg;
use dslice_core::slice::{AbstractionMode, SliceKind};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(name = "dslice", version, about = "Backward, control and data slices of .mini programs")]
struct Cli {
    /// Seed for generated inputs and criteria selection.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Follow weak control dependences in backward and control slices.
    #[arg(long, global = true)]
    weak_cd: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print a slice of a program.
    Slice(SliceArgs),
    /// Dump the CFG, reaching definitions, control dependences or PDG.
    Analyze(AnalyzeArgs),
    /// Check a slice against the original program by running both.
    Verify(VerifyArgs),
    /// Slice sizes over a corpus directory, as CSV.
    Stats(StatsArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Backward,
    Control,
    Data,
}

impl From<Kind> for SliceKind {
    fn from(k: Kind) -> SliceKind {
        match k {
            Kind::Backward => SliceKind::Backward,
            Kind::Control => SliceKind::Control,
            Kind::Data => SliceKind::Data,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Cond,
    Assign,
}

impl From<Mode> for AbstractionMode {
    fn from(m: Mode) -> AbstractionMode {
        match m {
            Mode::Cond => AbstractionMode::Cond,
            Mode::Assign => AbstractionMode::Assign,
        }
    }
}

#[derive(Args)]
struct CriterionArgs {
    /// Where to observe: a line number, `@N` (before statement N),
    /// `after@N` or `end`.
    #[arg(long)]
    at: String,
    /// Comma-separated variables to observe.
    #[arg(long, default_value = "")]
    vars: String,
    #[arg(long, value_enum, default_value = "backward")]
    kind: Kind,
    /// Abstraction used by data slices.
    #[arg(long, value_enum, default_value = "cond")]
    mode: Mode,
}

#[derive(Args)]
struct SliceArgs {
    #[command(flatten)]
    criterion: CriterionArgs,
    /// Also print the slice's labels as JSON.
    #[arg(long)]
    labels_json: bool,
    file: PathBuf,
}

#[derive(Args)]
#[command(group(ArgGroup::new("dump").required(true).multiple(true)))]
struct AnalyzeArgs {
    /// CFG in DOT format.
    #[arg(long, group = "dump")]
    dump_cfg: bool,
    /// Definitions of VARS (comma-separated) reaching statement LABEL.
    #[arg(long, group = "dump", num_args = 2, value_names = ["LABEL", "VARS"])]
    dump_du: Option<Vec<String>>,
    /// Control dependences, strong only unless `--weak`.
    #[arg(long, group = "dump")]
    dump_cd: bool,
    /// Include weak control dependences in `--dump-cd`.
    #[arg(long, requires = "dump_cd")]
    weak: bool,
    /// PDG in DOT format.
    #[arg(long, group = "dump")]
    dump_pdg: bool,
    file: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    criterion: CriterionArgs,
    /// JSON list of variable -> integer maps; random inputs otherwise.
    #[arg(long)]
    inputs: Option<PathBuf>,
    /// Number of random inputs when `--inputs` is absent.
    #[arg(long, default_value_t = 20)]
    random_inputs: usize,
    /// Check this slice file instead of computing the slice.
    #[arg(long)]
    slice: Option<PathBuf>,
    /// Step budget per run.
    #[arg(long, default_value_t = 10_000)]
    steps: usize,
    /// Nondeterministic decisions explored per run of a data slice.
    #[arg(long, default_value_t = 6)]
    branch_budget: usize,
    /// Cap on data-slice runs per input.
    #[arg(long, default_value_t = 200_000)]
    max_runs: usize,
    file: PathBuf,
}

#[derive(Args)]
struct StatsArgs {
    /// Add per-slice timing columns (milliseconds).
    #[arg(long)]
    timing: bool,
    dir: PathBuf,
}

fn prepared(c: &CriterionArgs, file: &PathBuf) -> Result<Prepared> {
    let p = read_program(file)?;
    let at = dslice::pipeline::parse_location(&c.at)?;
    prepare(&p, at, parse_vars(&c.vars))
}

fn cmd_slice(cli: &Cli, a: &SliceArgs) -> Result<u8> {
    let prep = prepared(&a.criterion, &a.file)?;
    let s = slice(&prep, a.criterion.kind.into(), a.criterion.mode.into(), cli.weak_cd);
    print!("{}", emit_slice(&prep, &s)?);
    if a.labels_json {
        println!("{}", serde_json::to_string(&LabelsJson::from(&s))?);
    }
    Ok(0)
}

fn cmd_analyze(a: &AnalyzeArgs) -> Result<u8> {
    let p = inline_calls(&read_program(&a.file)?)?;
    let pdg = Pdg::build(&p);
    if a.dump_cfg {
        print!("{}", pdg.cfg().to_dot());
    }
    if let Some([label, vars]) = a.dump_du.as_deref() {
        let n: u32 = label.trim_start_matches('@').parse().with_context(|| format!("bad label `{label}`"))?;
        if pdg.cfg().id(Label(n)).is_none() {
            bail!("no statement @{n}");
        }
        for d in pdg.reaching().du(pdg.cfg(), Label(n), &parse_vars(vars)) {
            println!("{}:{}", d.at, d.var);
        }
    }
    if a.dump_cd {
        for e in pdg.control_edges().iter().filter(|e| a.weak || e.strength == Strength::Strong) {
            println!("{e}");
        }
    }
    if a.dump_pdg {
        print!("{}", pdg.to_dot());
    }
    Ok(0)
}

fn exit_code(v: Verdict) -> u8 {
    match v {
        Verdict::Pass => 0,
        Verdict::Fail => 1,
        Verdict::Inconclusive => 2,
    }
}

fn cmd_verify(cli: &Cli, a: &VerifyArgs) -> Result<u8> {
    let prep = prepared(&a.criterion, &a.file)?;
    let kind: SliceKind = a.criterion.kind.into();
    let s = slice(&prep, kind, a.criterion.mode.into(), cli.weak_cd);
    let sliced = match &a.slice {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            parse_program(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => dslice_core::lang::subprogram(&prep.program, &s.labels(), &s.abstractions())?,
    };
    let inputs = match &a.inputs {
        Some(path) => read_inputs(path)?,
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
            random_inputs(&mut rng, &prep.program.globals(), a.random_inputs, -5, 10)
        }
    };
    let verdict = if kind == SliceKind::Data {
        let budgets = DataBudgets {
            steps: a.steps,
            branch_budget: a.branch_budget,
            max_runs: a.max_runs,
            probes: None,
        };
        let r = check_data_program(&prep.program, &sliced, &s.criterion, &inputs, &budgets)?;
        for i in &r.inputs {
            println!("input {}: p2 {} p3 {} ({} runs, {} nonterminating, {} faulted)", i.input, i.p2, i.p3, i.runs, i.nonterminating, i.faults);
            if let Some(m) = &i.mismatch {
                println!("  visit {}: expected {:?}, found {:?}", m.index, m.expected, m.found);
            }
        }
        report_skips(&r.skipped, r.original_faults.len());
        r.verdict()
    } else {
        let r = check_backward_program(&prep.program, &sliced, &s, &inputs, a.steps)?;
        println!("checked {} inputs", r.checked);
        for f in &r.failures {
            println!(
                "input {}: windows differ at visit {} (original {} visits, slice {} visits, slice {:?})",
                f.input, f.divergence, f.expected_visits, f.found_visits, f.slice_outcome
            );
        }
        report_skips(&r.skipped, r.original_faults.len());
        r.verdict()
    };
    println!("{verdict}");
    Ok(exit_code(verdict))
}

fn report_skips(skipped: &[usize], faults: usize) {
    if !skipped.is_empty() {
        println!("skipped inputs {skipped:?}: the original does not terminate within the step budget");
    }
    if faults > 0 {
        println!("skipped {faults} inputs on which the original faults");
    }
}

fn cmd_stats(cli: &Cli, a: &StatsArgs) -> Result<u8> {
    let corpus = load_dir(&a.dir)?;
    print!("{}", corpus_stats(&corpus, cli.seed)?.to_csv(a.timing)?);
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Slice(a) => cmd_slice(&cli, a),
        Cmd::Analyze(a) => cmd_analyze(a),
        Cmd::Verify(a) => cmd_verify(&cli, a),
        Cmd::Stats(a) => cmd_stats(&cli, a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
