//! Oracles: trace-window checks of backward, control and data slices, and
//! the definitional value-impacting set computed by path enumeration.

use alloc::collections::{BTreeSet, VecDeque};
use alloc::vec::Vec;
use core::fmt;
use core::ops::ControlFlow;

use fixedbitset::FixedBitSet;

use crate::cfg::{Branch, Cfg, NodeId};
use crate::dataflow::ReachingMap;
use crate::interp::{enumerate, FirstChoice, Input, Machine, Outcome, ProbeSet, WindowObserver, Fault};
use crate::lang::{subprogram, Error, Label, Program, SlicingCriterion};
use crate::slice::{SliceKind, SliceResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Verdict {
    Pass,
    Inconclusive,
    Fail,
}

impl Verdict {
    /// The worse of two verdicts.
    pub fn and(self, other: Verdict) -> Verdict {
        self.max(other)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Inconclusive => "inconclusive",
            Verdict::Fail => "fail",
        })
    }
}

/// Runs `m` deterministically and returns its window, or why not.
fn window_of(m: &Machine, c: &SlicingCriterion, input: &Input, steps: usize) -> (Outcome, Vec<Vec<i64>>) {
    let mut obs = WindowObserver::new(m, c, None);
    let outcome = m.execute(input, steps, &mut FirstChoice, &mut obs);
    (outcome, obs.snapshots)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackwardFailure {
    pub input: usize,
    /// Index of the first snapshot that differs or is missing.
    pub divergence: usize,
    pub expected_visits: usize,
    pub found_visits: usize,
    pub slice_outcome: Outcome,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BackwardReport {
    pub checked: usize,
    /// Inputs on which the original did not terminate within the budget.
    pub skipped: Vec<usize>,
    pub original_faults: Vec<(usize, Fault)>,
    pub failures: Vec<BackwardFailure>,
}

impl BackwardReport {
    pub fn verdict(&self) -> Verdict {
        if self.failures.is_empty() {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

/// Checks `TW(P, I, <l, V>) = TW(S, I, <l, V>)` for each input on which
/// `p` terminates; control slices compare with `V` empty.
pub fn check_backward(p: &Program, s: &SliceResult, inputs: &[Input], steps: usize) -> Result<BackwardReport, Error> {
    let slice = subprogram(p, &s.labels(), &s.abstractions())?;
    check_backward_program(p, &slice, s, inputs, steps)
}

/// As [`check_backward`] with the slice given as a program, e.g. one read
/// back from a file.
pub fn check_backward_program(
    p: &Program,
    slice: &Program,
    s: &SliceResult,
    inputs: &[Input],
    steps: usize,
) -> Result<BackwardReport, Error> {
    let mut c = s.criterion.clone();
    if s.kind == SliceKind::Control {
        c.vars.clear();
    }
    let original = Machine::with_vars(p, &c.vars);
    let sliced = Machine::with_vars(slice, &c.vars);
    let mut report = BackwardReport::default();
    for (i, input) in inputs.iter().enumerate() {
        let (outcome, expected) = window_of(&original, &c, input, steps);
        match outcome {
            Outcome::Terminated => {}
            Outcome::Fault(f) => {
                report.original_faults.push((i, f));
                continue;
            }
            _ => {
                report.skipped.push(i);
                continue;
            }
        }
        report.checked += 1;
        let (slice_outcome, found) = window_of(&sliced, &c, input, steps);
        if slice_outcome != Outcome::Terminated || found != expected {
            let divergence = expected.iter().zip(&found).take_while(|(a, b)| a == b).count();
            report.failures.push(BackwardFailure {
                input: i,
                divergence,
                expected_visits: expected.len(),
                found_visits: found.len(),
                slice_outcome,
            });
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataBudgets {
    pub steps: usize,
    /// Free nondeterministic decisions per trace; later ones take option 0.
    pub branch_budget: usize,
    /// Cap on resolutions per input; hitting it makes the check inconclusive.
    pub max_runs: usize,
    /// Probe values for abstract assignments; `None` uses the default set
    /// of the slice program.
    pub probes: Option<ProbeSet>,
}

impl Default for DataBudgets {
    fn default() -> Self {
        DataBudgets { steps: 10_000, branch_budget: 6, max_runs: 200_000, probes: None }
    }
}

/// A resolution of the slice whose window disagrees with the original on a
/// common prefix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrefixMismatch {
    pub index: usize,
    pub expected: Vec<i64>,
    pub found: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataInputReport {
    pub input: usize,
    /// Some resolution reproduces the original window exactly.
    pub p2: Verdict,
    /// Every resolution agrees with the original window on their common
    /// prefix.
    pub p3: Verdict,
    pub runs: usize,
    /// Resolutions excluded from P3 because they ran out of steps.
    pub nonterminating: usize,
    /// Resolutions excluded from P3 because they faulted.
    pub faults: usize,
    pub mismatch: Option<PrefixMismatch>,
}

impl DataInputReport {
    pub fn verdict(&self) -> Verdict {
        self.p2.and(self.p3)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DataReport {
    pub inputs: Vec<DataInputReport>,
    pub skipped: Vec<usize>,
    pub original_faults: Vec<(usize, Fault)>,
}

impl DataReport {
    pub fn p2(&self) -> Verdict {
        self.inputs.iter().map(|r| r.p2).max().unwrap_or(Verdict::Pass)
    }

    pub fn p3(&self) -> Verdict {
        self.inputs.iter().map(|r| r.p3).max().unwrap_or(Verdict::Pass)
    }

    pub fn verdict(&self) -> Verdict {
        self.p2().and(self.p3())
    }
}

/// Checks data-slice properties 2 and 3 by enumerating the resolutions of
/// the abstract slice on each input the original terminates on.
///
/// The probe set is extended, per abstract assignment, with the values the
/// same statement assigned in the original run, so a resolution that
/// replays the original is always among those tried.
pub fn check_data(p: &Program, d: &SliceResult, inputs: &[Input], budgets: &DataBudgets) -> Result<DataReport, Error> {
    let slice = subprogram(p, &d.labels(), &d.abstractions())?;
    check_data_program(p, &slice, &d.criterion, inputs, budgets)
}

pub fn check_data_program(
    p: &Program,
    slice: &Program,
    c: &SlicingCriterion,
    inputs: &[Input],
    budgets: &DataBudgets,
) -> Result<DataReport, Error> {
    let original = Machine::with_vars(p, &c.vars);
    let sliced = Machine::with_vars(slice, &c.vars);
    let base = budgets.probes.clone().unwrap_or_else(|| ProbeSet::default_for(slice));
    let abstract_assigns: BTreeSet<Label> =
        slice.statements().into_iter().filter(|s| s.is_abstract() && s.def().is_some()).map(|s| s.label).collect();
    let mut report = DataReport::default();
    for (i, input) in inputs.iter().enumerate() {
        let mut obs = WindowObserver::new(&original, c, None).recording_assignments(&original, p);
        match original.execute(input, budgets.steps, &mut FirstChoice, &mut obs) {
            Outcome::Terminated => {}
            Outcome::Fault(f) => {
                report.original_faults.push((i, f));
                continue;
            }
            _ => {
                report.skipped.push(i);
                continue;
            }
        }
        let assigned = obs.assigned.take().unwrap_or_default();
        let expected = obs.snapshots;
        let mut probes = base.clone();
        for (l, values) in assigned {
            if abstract_assigns.contains(&l) {
                probes.per_label.entry(l).or_default().extend(values);
            }
        }
        let m = expected.len();
        let mut r = DataInputReport {
            input: i,
            p2: Verdict::Fail,
            p3: Verdict::Pass,
            runs: 0,
            nonterminating: 0,
            faults: 0,
            mismatch: None,
        };
        let mut found = false;
        let mut capped = false;
        let stats = enumerate(
            &sliced,
            input,
            budgets.steps,
            budgets.branch_budget,
            &probes,
            || WindowObserver::new(&sliced, c, Some(m)),
            |res| {
                r.runs += 1;
                match res.outcome {
                    Outcome::Terminated | Outcome::Stopped => {
                        let snaps = &res.observer.snapshots;
                        if r.mismatch.is_none() {
                            if let Some(k) = (0..snaps.len().min(m)).find(|&k| snaps[k] != expected[k]) {
                                r.mismatch = Some(PrefixMismatch {
                                    index: k,
                                    expected: expected[k].clone(),
                                    found: snaps[k].clone(),
                                });
                            }
                        }
                        if res.outcome == Outcome::Terminated && *snaps == expected {
                            found = true;
                        }
                    }
                    Outcome::OutOfSteps => r.nonterminating += 1,
                    Outcome::Fault(_) => r.faults += 1,
                }
                if found && r.mismatch.is_some() {
                    return ControlFlow::Break(());
                }
                if r.runs >= budgets.max_runs {
                    capped = true;
                    return ControlFlow::Break(());
                }
                ControlFlow::Continue(())
            },
        );
        let complete = !stats.incomplete && !capped;
        r.p2 = match (found, complete) {
            (true, _) => Verdict::Pass,
            (false, true) => Verdict::Fail,
            (false, false) => Verdict::Inconclusive,
        };
        r.p3 = match (r.mismatch.is_some(), complete) {
            (true, _) => Verdict::Fail,
            (false, true) => Verdict::Pass,
            (false, false) => Verdict::Inconclusive,
        };
        report.inputs.push(r);
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PathBoundExceeded {
    pub bound: usize,
}

impl fmt::Display for PathBoundExceeded {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a loop-free path is longer than the bound {}", self.bound)
    }
}

impl core::error::Error for PathBoundExceeded {}

/// `<path1, path2, t>`: `t` is the first value-impacting statement on
/// `path1` but not on `path2`. Paths start at the condition and end at `l`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub cond: Label,
    pub path1: Vec<Label>,
    pub path2: Vec<Label>,
    pub t: Label,
}

struct Vi<'a> {
    g: &'a Cfg,
    l: NodeId,
    bound: usize,
}

impl Vi<'_> {
    fn succ(&self, n: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.g.out_edges(n).filter(|e| !e.special).map(|e| e.dst)
    }

    /// Shortest path from `from` to `l` avoiding `blocked`.
    fn continuation(&self, from: NodeId, blocked: &FixedBitSet) -> Option<Vec<NodeId>> {
        let n = self.g.len();
        let mut prev: Vec<Option<NodeId>> = alloc::vec![None; n];
        let mut seen = blocked.clone();
        seen.insert(from.index());
        let mut queue = VecDeque::from([from]);
        while let Some(x) = queue.pop_front() {
            if x == self.l {
                let mut path = alloc::vec![x];
                let mut cur = x;
                while let Some(p) = prev[cur.index()] {
                    path.push(p);
                    cur = p;
                }
                path.reverse();
                return Some(path);
            }
            for y in self.succ(x) {
                if !seen.put(y.index()) {
                    prev[y.index()] = Some(x);
                    queue.push_back(y);
                }
            }
        }
        None
    }

    /// Enumerates loop-free paths that leave `c` by `branch`, meet no
    /// value-impacting statement before their first one `t`, never enter
    /// `avoid`, and continue from `t` to `l`. `found` receives the nodes
    /// strictly between `c` and `t`, `t`, and one full path; returning true
    /// stops the search.
    fn prefixes(
        &self,
        vi: &FixedBitSet,
        c: NodeId,
        branch: Branch,
        avoid: &FixedBitSet,
        found: &mut dyn FnMut(&[NodeId], NodeId, Vec<NodeId>) -> Result<bool, PathBoundExceeded>,
    ) -> Result<bool, PathBoundExceeded> {
        let Some(start) = self.g.branch_target(c, branch) else { return Ok(false) };
        let mut on_path = FixedBitSet::with_capacity(self.g.len());
        on_path.insert(c.index());
        let mut path = alloc::vec![c];
        self.walk(vi, start, avoid, &mut on_path, &mut path, found)
    }

    fn walk(
        &self,
        vi: &FixedBitSet,
        n: NodeId,
        avoid: &FixedBitSet,
        on_path: &mut FixedBitSet,
        path: &mut Vec<NodeId>,
        found: &mut dyn FnMut(&[NodeId], NodeId, Vec<NodeId>) -> Result<bool, PathBoundExceeded>,
    ) -> Result<bool, PathBoundExceeded> {
        if path.len() > self.bound {
            return Err(PathBoundExceeded { bound: self.bound });
        }
        if avoid.contains(n.index()) {
            return Ok(false);
        }
        if vi.contains(n.index()) {
            let Some(rest) = self.continuation(n, on_path) else { return Ok(false) };
            if path.len() + rest.len() - 1 > self.bound {
                return Err(PathBoundExceeded { bound: self.bound });
            }
            let mut full = path.clone();
            full.extend(rest);
            return found(&path[1..], n, full);
        }
        on_path.insert(n.index());
        path.push(n);
        let succ: Vec<NodeId> = self.succ(n).collect();
        for s in succ {
            if !on_path.contains(s.index()) && self.walk(vi, s, avoid, on_path, path, found)? {
                return Ok(true);
            }
        }
        path.pop();
        on_path.set(n.index(), false);
        Ok(false)
    }

    /// Length of the longest loop-free path from `from` to `l`.
    fn mlp(&self, from: NodeId) -> Result<Option<usize>, PathBoundExceeded> {
        fn go(v: &Vi<'_>, n: NodeId, depth: usize, on: &mut FixedBitSet, best: &mut Option<usize>) -> Result<(), PathBoundExceeded> {
            if depth > v.bound {
                return Err(PathBoundExceeded { bound: v.bound });
            }
            if n == v.l {
                *best = Some(best.map_or(depth, |b| b.max(depth)));
                return Ok(());
            }
            on.insert(n.index());
            let succ: Vec<NodeId> = v.succ(n).collect();
            for s in succ {
                if !on.contains(s.index()) {
                    go(v, s, depth + 1, on, best)?;
                }
            }
            on.set(n.index(), false);
            Ok(())
        }
        let mut best = None;
        go(self, from, 0, &mut FixedBitSet::with_capacity(self.g.len()), &mut best)?;
        Ok(best)
    }

    /// Two paths, one per edge of `c`, whose first value-impacting
    /// statements differ and which share no node before reaching them: the
    /// outcome at `c` itself decides which of the two executes next.
    fn witness(&self, vi: &FixedBitSet, c: NodeId) -> Result<Option<(Vec<NodeId>, Vec<NodeId>, NodeId)>, PathBoundExceeded> {
        let none = FixedBitSet::with_capacity(self.g.len());
        let mut out = None;
        self.prefixes(vi, c, Branch::True, &none, &mut |between, t1, full1| {
            let mut avoid = FixedBitSet::with_capacity(self.g.len());
            avoid.extend(between.iter().map(|n| n.index()));
            self.prefixes(vi, c, Branch::False, &avoid, &mut |_, t2, full2| {
                if t2 == t1 {
                    return Ok(false);
                }
                out = Some((full1.clone(), full2, t1));
                Ok(true)
            })
        })?;
        Ok(out)
    }
}

/// Rules 1 to 3: the criterion, its reaching definitions, and the
/// definitions read by members, closed.
fn close_assignments(g: &Cfg, rm: &ReachingMap, c: &SlicingCriterion, vi: &mut FixedBitSet) {
    let l = g.id(c.location).expect("criterion location");
    let mut stack: Vec<NodeId> = rm.du_nodes(l, &c.vars);
    for t in vi.ones() {
        let t = NodeId(t as u32);
        stack.extend(rm.du_nodes(t, &g.info(t).refs));
    }
    while let Some(s) = stack.pop() {
        if !vi.put(s.index()) {
            stack.extend(rm.du_nodes(s, &g.info(s).refs));
        }
    }
}

fn vi_nodes<'a>(g: &'a Cfg, rm: &ReachingMap, c: &SlicingCriterion, bound: usize) -> Result<(FixedBitSet, Vi<'a>), PathBoundExceeded> {
    let l = g.id(c.location).expect("criterion location");
    let v = Vi { g, l, bound };
    let mut vi = FixedBitSet::with_capacity(g.len());
    vi.insert(l.index());
    close_assignments(g, rm, c, &mut vi);
    let mut conds = Vec::new();
    for id in g.statement_ids().filter(|&n| g.is_condition(n)) {
        if let Some(d) = v.mlp(id)? {
            conds.push((d, id));
        }
    }
    conds.sort();
    loop {
        let mut changed = false;
        for &(_, cnd) in &conds {
            if !vi.contains(cnd.index()) && v.witness(&vi, cnd)?.is_some() {
                vi.insert(cnd.index());
                close_assignments(g, rm, c, &mut vi);
                changed = true;
            }
        }
        if !changed {
            return Ok((vi, v));
        }
    }
}

/// The value-impacting statements of `c` by definition: the criterion,
/// closed under reaching definitions, plus conditions with a witness over
/// loop-free paths. The two paths of a witness must not meet before their
/// first value-impacting statements; otherwise a later condition, not this
/// one, chooses between them.
///
/// Whether a condition has a witness depends on which statements are
/// already value-impacting, so conditions are decided nearest to `l` first
/// (by longest loop-free path), repeating until nothing changes.
pub fn vi_oracle(g: &Cfg, rm: &ReachingMap, c: &SlicingCriterion, path_bound: usize) -> Result<BTreeSet<Label>, PathBoundExceeded> {
    let (vi, _) = vi_nodes(g, rm, c, path_bound)?;
    Ok(vi.ones().filter_map(|i| g.label(NodeId(i as u32))).collect())
}

/// A witness for `cond` against the final value-impacting set, if any.
pub fn vi_witness(
    g: &Cfg,
    rm: &ReachingMap,
    c: &SlicingCriterion,
    cond: Label,
    path_bound: usize,
) -> Result<Option<Witness>, PathBoundExceeded> {
    let (mut vi, v) = vi_nodes(g, rm, c, path_bound)?;
    let Some(id) = g.id(cond) else { return Ok(None) };
    vi.set(id.index(), false);
    let labels = |p: Vec<NodeId>| p.into_iter().filter_map(|n| g.label(n)).collect();
    Ok(v.witness(&vi, id)?.map(|(p1, p2, t)| Witness {
        cond,
        path1: labels(p1),
        path2: labels(p2),
        t: g.label(t).expect("statement"),
    }))
}
