//! Backward, control and data slices.
//!
//! A data slice keeps the computed value-impacting set `CVI` and governs it
//! either by abstract conditions (`if (*)`) or by concrete conditions whose
//! inputs are abstract assignments (`x = *`).
//!
//! Every slice is closed under three rules until nothing changes:
//! a `break`/`continue` is kept when its innermost enclosing `if`/`while`
//! is kept; a jump is kept when deleting it would change which slice
//! statement control reaches next (its nearest post-dominator in the slice
//! differs from its nearest lexical successor in the slice); and a missing
//! enclosing condition of a kept statement is added (abstract in data
//! slices). Backward slices also take the dependences of added jumps.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::vec::Vec;

use fixedbitset::FixedBitSet;

use crate::cdeps::{ControlDeps, Strength};
use crate::cfg::{Branch, Cfg, NodeId, NodeKind};
use crate::lang::{Abstraction, Label, SlicingCriterion};
use crate::pdg::Pdg;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SliceKind {
    Backward,
    Control,
    Data,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AbstractionMode {
    /// Non-value-impacting governing conditions become `*`.
    Cond,
    /// Governing conditions stay concrete; the assignments they read
    /// become `x = *`.
    Assign,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SliceResult {
    pub kind: SliceKind,
    pub mode: Option<AbstractionMode>,
    pub criterion: SlicingCriterion,
    pub retained: BTreeSet<Label>,
    pub abstract_conds: BTreeSet<Label>,
    pub abstract_assigns: BTreeSet<Label>,
}

impl SliceResult {
    pub fn abstractions(&self) -> BTreeMap<Label, Abstraction> {
        let conds = self.abstract_conds.iter().map(|&l| (l, Abstraction::Cond));
        conds.chain(self.abstract_assigns.iter().map(|&l| (l, Abstraction::Assign))).collect()
    }

    /// Every statement of the slice, concrete or abstract.
    pub fn labels(&self) -> BTreeSet<Label> {
        let mut all = self.retained.clone();
        all.extend(&self.abstract_conds);
        all.extend(&self.abstract_assigns);
        all
    }

    /// Number of statements, not counting the criterion `SKIP`.
    pub fn size(&self) -> usize {
        self.retained.len() + self.abstract_conds.len() + self.abstract_assigns.len()
            - usize::from(self.retained.contains(&self.criterion.location))
    }
}

fn to_labels(g: &Cfg, set: &FixedBitSet) -> BTreeSet<Label> {
    set.ones().filter_map(|i| g.label(NodeId(i as u32))).collect()
}

fn criterion_node(pdg: &Pdg, c: &SlicingCriterion) -> NodeId {
    pdg.cfg().id(c.location).expect("criterion location is a statement of the program")
}

/// The slice statement control reaches after `j` in the original program:
/// its nearest post-dominator among `present` (or EXIT).
fn nearest_pdom(g: &Cfg, cd: &ControlDeps, j: NodeId, present: &FixedBitSet) -> NodeId {
    let pd = cd.post_dominance();
    let candidates: Vec<NodeId> = g
        .node_ids()
        .filter(|&x| x != j && (x == NodeId::EXIT || present.contains(x.index())) && pd.weak(x, j))
        .collect();
    // Post-dominators of a node form a chain; the nearest is dominated by all.
    *candidates.iter().find(|&&x| candidates.iter().all(|&y| pd.weak(y, x))).expect("EXIT post-dominates every node")
}

/// The slice statement control would reach if `j` were deleted.
fn nearest_lexical(g: &Cfg, j: NodeId, present: &FixedBitSet) -> NodeId {
    let mut cur = g.info(j).fallthrough.expect("statement");
    while cur != NodeId::EXIT && !present.contains(cur.index()) {
        cur = g.info(cur).fallthrough.expect("statement");
    }
    cur
}

/// The lexically last jump outside `present` whose deletion would redirect
/// control. Jumps on another jump's lexical path come after it, so taking
/// the last one first avoids keeping a jump only because a later one is
/// still missing.
fn needed_jump(g: &Cfg, cd: &ControlDeps, present: &FixedBitSet) -> Option<NodeId> {
    g.statement_ids()
        .filter(|&j| g.info(j).kind == NodeKind::Jump && !present.contains(j.index()))
        .filter(|&j| nearest_pdom(g, cd, j, present) != nearest_lexical(g, j, present))
        .last()
}

/// Adds kept jumps and missing enclosing conditions until stable. New
/// conditions go to `added`, which may alias `kept` via the caller.
fn close_structure(g: &Cfg, cd: &ControlDeps, kept: &mut FixedBitSet, added: &mut FixedBitSet) {
    loop {
        let mut changed = false;
        let mut present = kept.clone();
        present.union_with(added);
        if let Some(j) = needed_jump(g, cd, &present) {
            kept.insert(j.index());
            changed = true;
        }
        for id in g.statement_ids() {
            let i = id.index();
            let info = g.info(id);
            let present = kept.contains(i) || added.contains(i);
            if !present && info.kind == NodeKind::Jump {
                let parent = info.parent.and_then(|p| g.id(p)).expect("jumps sit inside loops");
                if kept.contains(parent.index()) || added.contains(parent.index()) {
                    kept.insert(i);
                    changed = true;
                }
            }
            if kept.contains(i) || added.contains(i) {
                let mut up = info.parent;
                while let Some(p) = up {
                    let pid = g.id(p).expect("parent is a statement");
                    if kept.contains(pid.index()) || added.contains(pid.index()) {
                        break;
                    }
                    added.insert(pid.index());
                    changed = true;
                    up = g.info(pid).parent;
                }
            }
        }
        if !changed {
            return;
        }
    }
}

fn closure(pdg: &Pdg, seeds: impl IntoIterator<Item = NodeId>, weak_cd: bool) -> FixedBitSet {
    let n = pdg.cfg().len();
    let mut seen = FixedBitSet::with_capacity(n);
    let mut stack: Vec<NodeId> = Vec::new();
    for s in seeds {
        if !seen.put(s.index()) {
            stack.push(s);
        }
    }
    while let Some(t) = stack.pop() {
        let strong = pdg.control_preds(t, Strength::Strong);
        let weak: &[NodeId] = if weak_cd { pdg.control_preds(t, Strength::Weak) } else { &[] };
        for &s in pdg.data_preds(t).iter().chain(strong).chain(weak) {
            if !seen.put(s.index()) {
                stack.push(s);
            }
        }
    }
    seen
}

/// Backward slice `P^B`: closure over data and strong control dependence
/// from `DU(l, V)` and the conditions `l` depends on. With `weak_cd`, weak
/// control dependences are followed too.
pub fn backward_slice_with(pdg: &Pdg, c: &SlicingCriterion, weak_cd: bool) -> SliceResult {
    let g = pdg.cfg();
    let l = criterion_node(pdg, c);
    let mut seeds: Vec<NodeId> = core::iter::once(l).chain(pdg.du_nodes(l, &c.vars)).collect();
    let kept = loop {
        let mut kept = closure(pdg, seeds.iter().copied(), weak_cd);
        let mut added = FixedBitSet::with_capacity(g.len());
        close_structure(g, pdg.control(), &mut kept, &mut added);
        kept.union_with(&added);
        let before = seeds.len();
        seeds.extend(kept.ones().map(|i| NodeId(i as u32)).filter(|&n| g.info(n).kind == NodeKind::Jump));
        seeds.sort();
        seeds.dedup();
        if seeds.len() == before {
            break kept;
        }
    };
    SliceResult {
        kind: SliceKind::Backward,
        mode: None,
        criterion: c.clone(),
        retained: to_labels(g, &kept),
        abstract_conds: BTreeSet::new(),
        abstract_assigns: BTreeSet::new(),
    }
}

pub fn backward_slice(pdg: &Pdg, c: &SlicingCriterion) -> SliceResult {
    backward_slice_with(pdg, c, false)
}

/// Control slice `P^C`: the backward slice for `<l, {}>`.
pub fn control_slice_with(pdg: &Pdg, c: &SlicingCriterion, weak_cd: bool) -> SliceResult {
    let empty = SlicingCriterion { location: c.location, vars: BTreeSet::new() };
    SliceResult { kind: SliceKind::Control, criterion: c.clone(), ..backward_slice_with(pdg, &empty, weak_cd) }
}

pub fn control_slice(pdg: &Pdg, c: &SlicingCriterion) -> SliceResult {
    control_slice_with(pdg, c, false)
}

/// Conditions that rule 4 adds on account of `t`, an accepted member of
/// `CVI`; `l` is the criterion node.
pub fn get_cvi_conds(cd: &ControlDeps, t: NodeId, l: NodeId) -> Vec<NodeId> {
    use Branch::{False as F, True as T};
    let mut out = Vec::new();
    for &(c, tf) in cd.tcntrls_flags(t) {
        let lf = cd.flags(l, c);
        let lst = |e| lf.has(e, true);
        let tst = |e| tf.has(e, true);
        let tsw = |e| tf.has(e, false);
        let rule_a = !lst(T) && !lst(F) && (tst(T) || tst(F));
        let rule_b = (lst(T) && !tst(T) && tsw(F)) || (lst(F) && !tst(F) && tsw(T));
        if rule_a || rule_b {
            out.push(c);
        }
    }
    out
}

/// `CVI(<l, V>)` with a FIFO worklist.
pub fn compute_cvi(pdg: &Pdg, c: &SlicingCriterion) -> BTreeSet<Label> {
    to_labels(pdg.cfg(), &cvi_nodes(pdg, c, |_| 0))
}

/// `CVI` with the worklist discipline given by `pick`, which receives the
/// current worklist length and returns the index to take next.
pub fn compute_cvi_with(pdg: &Pdg, c: &SlicingCriterion, pick: impl FnMut(usize) -> usize) -> BTreeSet<Label> {
    to_labels(pdg.cfg(), &cvi_nodes(pdg, c, pick))
}

fn cvi_nodes(pdg: &Pdg, c: &SlicingCriterion, mut pick: impl FnMut(usize) -> usize) -> FixedBitSet {
    let n = pdg.cfg().len();
    let cd = pdg.control();
    let l = criterion_node(pdg, c);
    let mut inslice = FixedBitSet::with_capacity(n);
    let mut inwl = FixedBitSet::with_capacity(n);
    inslice.insert(l.index());
    let mut wl: VecDeque<NodeId> = VecDeque::new();
    for s in pdg.du_nodes(l, &c.vars) {
        if !inwl.put(s.index()) {
            wl.push_back(s);
        }
    }
    while !wl.is_empty() {
        let i = pick(wl.len());
        let w = wl.remove(i).expect("pick returns an index into the worklist");
        inslice.insert(w.index());
        let conds = get_cvi_conds(cd, w, l);
        for &s in pdg.data_preds(w).iter().chain(&conds) {
            if !inwl.put(s.index()) {
                wl.push_back(s);
            }
        }
    }
    inslice
}

fn ac_nodes(pdg: &Pdg, cvi: &FixedBitSet) -> FixedBitSet {
    let mut ac = FixedBitSet::with_capacity(pdg.cfg().len());
    for t in cvi.ones() {
        for c in pdg.control().strong_controllers(NodeId(t as u32)) {
            ac.insert(c.index());
        }
    }
    ac.difference_with(cvi);
    ac
}

/// `AC`: conditions some member of `cvi` strongly and transitively depends
/// on, minus `cvi` itself.
pub fn ac_conditions(pdg: &Pdg, cvi: &BTreeSet<Label>) -> BTreeSet<Label> {
    let g = pdg.cfg();
    let mut set = FixedBitSet::with_capacity(g.len());
    for &l in cvi {
        set.insert(g.id(l).expect("label of this program").index());
    }
    to_labels(g, &ac_nodes(pdg, &set))
}

/// Data slice `P^D` in the given abstraction mode.
pub fn data_slice(pdg: &Pdg, c: &SlicingCriterion, mode: AbstractionMode) -> SliceResult {
    let g = pdg.cfg();
    let cvi = cvi_nodes(pdg, c, |_| 0);
    let ac = ac_nodes(pdg, &cvi);
    let mut kept = cvi.clone();
    let mut abstract_conds = FixedBitSet::with_capacity(g.len());
    let mut abstract_assigns = FixedBitSet::with_capacity(g.len());
    match mode {
        AbstractionMode::Cond => abstract_conds.union_with(&ac),
        AbstractionMode::Assign => {
            kept.union_with(&ac);
            for cond in ac.ones() {
                for &d in pdg.data_preds(NodeId(cond as u32)) {
                    if !cvi.contains(d.index()) {
                        abstract_assigns.insert(d.index());
                    }
                }
            }
        }
    }
    // Abstract assignments are statements of the slice as well; keep them
    // visible to the structure rule, then split them out again.
    kept.union_with(&abstract_assigns);
    close_structure(g, pdg.control(), &mut kept, &mut abstract_conds);
    kept.difference_with(&abstract_assigns);
    SliceResult {
        kind: SliceKind::Data,
        mode: Some(mode),
        criterion: c.clone(),
        retained: to_labels(g, &kept),
        abstract_conds: to_labels(g, &abstract_conds),
        abstract_assigns: to_labels(g, &abstract_assigns),
    }
}
