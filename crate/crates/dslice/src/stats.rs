//! Slice-size and timing statistics over a corpus.
//!
//! One row per program averages its criteria; the `Overall` row averages
//! over all criteria of all programs. Sizes count statements of the
//! inlined program, without the criterion `skip`. Data slices use condition
//! abstraction. Times include building the PDG and exclude parsing.

use std::time::{Duration, Instant};

use anyhow::{Context, Result};
use dslice_core::slice::{backward_slice, control_slice, data_slice, AbstractionMode, SliceResult};
use dslice_core::lang::inline_calls;
use dslice_core::pdg::Pdg;
use rayon::prelude::*;

use crate::corpus::CorpusProgram;
use crate::criteria::{self, Criterion};
use crate::pipeline::{prepare, Prepared};

pub const MAX_CRITERIA: usize = 10;

/// Sizes and times of the three slices for one criterion.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub criterion: Criterion,
    pub bs: usize,
    pub ds: usize,
    pub cs: usize,
    pub times: [Duration; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatsRow {
    pub program: String,
    pub nodes: usize,
    pub slices: usize,
    pub bs: f64,
    pub ds: f64,
    pub cs: f64,
    pub bs_pct: f64,
    pub ds_pct: f64,
    pub cs_pct: f64,
    pub bs_ms: f64,
    pub ds_ms: f64,
    pub cs_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProgramStats {
    pub id: String,
    pub nodes: usize,
    pub samples: Vec<Sample>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stats {
    pub programs: Vec<ProgramStats>,
}

fn timed(prep: &Prepared, f: impl Fn(&Pdg) -> SliceResult) -> (SliceResult, Duration) {
    let start = Instant::now();
    let pdg = Pdg::build(&prep.program);
    let s = f(&pdg);
    (s, start.elapsed())
}

pub fn program_stats(cp: &CorpusProgram, seed: u64) -> Result<ProgramStats> {
    let nodes = inline_calls(&cp.program)?.statements().len();
    let mut samples = Vec::new();
    for c in criteria::select(&cp.program, &cp.id, seed, MAX_CRITERIA) {
        let prep = prepare(&cp.program, c.at, c.vars.iter().cloned()).with_context(|| format!("{}: {c:?}", cp.id))?;
        let crit = &prep.criterion;
        let (bs, tb) = timed(&prep, |pdg| backward_slice(pdg, crit));
        let (ds, td) = timed(&prep, |pdg| data_slice(pdg, crit, AbstractionMode::Cond));
        let (cs, tc) = timed(&prep, |pdg| control_slice(pdg, crit));
        samples.push(Sample { criterion: c, bs: bs.size(), ds: ds.size(), cs: cs.size(), times: [tb, td, tc] });
    }
    Ok(ProgramStats { id: cp.id.clone(), nodes, samples })
}

/// Statistics for every program, computed in parallel, in corpus order.
pub fn corpus_stats(corpus: &[CorpusProgram], seed: u64) -> Result<Stats> {
    let programs = corpus.par_iter().map(|cp| program_stats(cp, seed)).collect::<Result<Vec<_>>>()?;
    Ok(Stats { programs })
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn row<'a>(program: String, nodes: usize, samples: impl Iterator<Item = (usize, &'a Sample)> + Clone) -> StatsRow {
    let pct = |size: usize, n: usize| if n == 0 { 0.0 } else { 100.0 * size as f64 / n as f64 };
    let ms = |d: Duration| d.as_secs_f64() * 1000.0;
    StatsRow {
        program,
        nodes,
        slices: samples.clone().count(),
        bs: mean(samples.clone().map(|(_, s)| s.bs as f64)),
        ds: mean(samples.clone().map(|(_, s)| s.ds as f64)),
        cs: mean(samples.clone().map(|(_, s)| s.cs as f64)),
        bs_pct: mean(samples.clone().map(|(n, s)| pct(s.bs, n))),
        ds_pct: mean(samples.clone().map(|(n, s)| pct(s.ds, n))),
        cs_pct: mean(samples.clone().map(|(n, s)| pct(s.cs, n))),
        bs_ms: mean(samples.clone().map(|(_, s)| ms(s.times[0]))),
        ds_ms: mean(samples.clone().map(|(_, s)| ms(s.times[1]))),
        cs_ms: mean(samples.map(|(_, s)| ms(s.times[2]))),
    }
}

impl Stats {
    pub fn rows(&self) -> Vec<StatsRow> {
        self.programs.iter().map(|p| row(p.id.clone(), p.nodes, p.samples.iter().map(|s| (p.nodes, s)))).collect()
    }

    /// Averages over every criterion of every program; `None` for an empty
    /// corpus.
    pub fn overall(&self) -> Option<StatsRow> {
        if self.programs.is_empty() {
            return None;
        }
        let nodes = self.programs.iter().map(|p| p.nodes).sum();
        let all = self.programs.iter().flat_map(|p| p.samples.iter().map(move |s| (p.nodes, s)));
        Some(row("Overall".into(), nodes, all))
    }

    /// CSV with one row per program and an `Overall` row. Timing columns
    /// are present only with `timing`, which keeps the default output
    /// identical across runs.
    pub fn to_csv(&self, timing: bool) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["program", "nodes", "slices", "bs", "ds", "cs", "bs_pct", "ds_pct", "cs_pct"];
        if timing {
            header.extend(["bs_ms", "ds_ms", "cs_ms"]);
        }
        w.write_record(&header)?;
        for r in self.rows().into_iter().chain(self.overall()) {
            let mut rec = vec![r.program.clone(), r.nodes.to_string(), r.slices.to_string()];
            rec.extend([r.bs, r.ds, r.cs, r.bs_pct, r.ds_pct, r.cs_pct].map(|x| format!("{x:.2}")));
            if timing {
                rec.extend([r.bs_ms, r.ds_ms, r.cs_ms].map(|x| format!("{x:.3}")));
            }
            w.write_record(&rec)?;
        }
        Ok(String::from_utf8(w.into_inner()?)?)
    }
}
