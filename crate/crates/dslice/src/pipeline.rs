//! Parse, augment, inline, build the PDG, slice.

use std::collections::BTreeSet;

use anyhow::{bail, Context, Result};
use dslice_core::lang::{augment, emit, inline_calls, Label, Location, Program, SlicingCriterion};
use dslice_core::pdg::Pdg;
use dslice_core::slice::{backward_slice_with, control_slice_with, data_slice, AbstractionMode, SliceKind, SliceResult};
use serde::Serialize;

/// An augmented, inlined program with its criterion and PDG.
pub struct Prepared {
    pub program: Program,
    pub criterion: SlicingCriterion,
    pub pdg: Pdg,
}

pub fn prepare<I, S>(p: &Program, at: Location, vars: I) -> Result<Prepared>
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let (aug, criterion) = augment(p, at, vars)?;
    let program = inline_calls(&aug)?;
    let pdg = Pdg::build(&program);
    Ok(Prepared { program, criterion, pdg })
}

/// `end`, `@N` (before the statement labeled N), `after@N` or a line
/// number.
pub fn parse_location(s: &str) -> Result<Location> {
    let s = s.trim();
    if s.eq_ignore_ascii_case("end") {
        return Ok(Location::End);
    }
    if let Some(n) = s.strip_prefix("after@") {
        return Ok(Location::After(Label(n.parse().with_context(|| format!("bad label `{s}`"))?)));
    }
    if let Some(n) = s.strip_prefix('@') {
        return Ok(Location::Before(Label(n.parse().with_context(|| format!("bad label `{s}`"))?)));
    }
    match s.parse() {
        Ok(0) | Err(_) => bail!("bad location `{s}`: expected a line number, `@N` or `end`"),
        Ok(n) => Ok(Location::Line(n)),
    }
}

/// Splits `a,b,c`; empty input gives the empty set.
pub fn parse_vars(s: &str) -> BTreeSet<String> {
    s.split(',').map(str::trim).filter(|v| !v.is_empty()).map(String::from).collect()
}

pub fn slice(prep: &Prepared, kind: SliceKind, mode: AbstractionMode, weak_cd: bool) -> SliceResult {
    match kind {
        SliceKind::Backward => backward_slice_with(&prep.pdg, &prep.criterion, weak_cd),
        SliceKind::Control => control_slice_with(&prep.pdg, &prep.criterion, weak_cd),
        SliceKind::Data => data_slice(&prep.pdg, &prep.criterion, mode),
    }
}

/// The slice as labeled source.
pub fn emit_slice(prep: &Prepared, s: &SliceResult) -> Result<String> {
    Ok(emit(&prep.program, &s.retained, &s.abstractions())?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LabelsJson {
    pub retained: Vec<u32>,
    pub abstract_conds: Vec<u32>,
    pub abstract_assigns: Vec<u32>,
}

impl From<&SliceResult> for LabelsJson {
    fn from(s: &SliceResult) -> Self {
        let nums = |set: &BTreeSet<Label>| set.iter().map(|l| l.0).collect();
        LabelsJson {
            retained: nums(&s.retained),
            abstract_conds: nums(&s.abstract_conds),
            abstract_assigns: nums(&s.abstract_assigns),
        }
    }
}
