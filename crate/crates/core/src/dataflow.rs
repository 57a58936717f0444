//! Reaching definitions and the `DU` / `REF` / `LV` accessors.
//!
//! Special CFG edges are ignored: they exist for post-dominance only.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::string::String;
use alloc::vec::Vec;

use fixedbitset::FixedBitSet;

use crate::cfg::{Cfg, NodeId};
use crate::lang::{Label, SlicingCriterion, Stmt};

/// A definition of `var` at the assignment labeled `at`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Definition {
    pub at: Label,
    pub var: String,
}

/// Definitions reaching the entry of every CFG node.
#[derive(Debug, Clone)]
pub struct ReachingMap {
    defs: Vec<(NodeId, Definition)>,
    reach_in: Vec<FixedBitSet>,
    var_defs: BTreeMap<String, FixedBitSet>,
}

/// Least fixpoint of the gen/kill equations, FIFO worklist seeded in
/// reverse post-order.
pub fn reaching_definitions(g: &Cfg) -> ReachingMap {
    reaching_definitions_in_order(g, &g.reverse_post_order())
}

/// As [`reaching_definitions`] but seeding the worklist with `order`, which
/// must list every node once. The result does not depend on the order.
pub fn reaching_definitions_in_order(g: &Cfg, order: &[NodeId]) -> ReachingMap {
    let n = g.len();
    let mut defs = Vec::new();
    let mut def_of = alloc::vec![None; n];
    for id in g.statement_ids() {
        if let Some(v) = &g.info(id).def {
            def_of[id.index()] = Some(defs.len());
            defs.push((id, Definition { at: g.label(id).expect("statement"), var: v.clone() }));
        }
    }
    let nd = defs.len();
    let mut var_defs: BTreeMap<String, FixedBitSet> = BTreeMap::new();
    for (i, (_, d)) in defs.iter().enumerate() {
        var_defs.entry(d.var.clone()).or_insert_with(|| FixedBitSet::with_capacity(nd)).insert(i);
    }

    let mut reach_in = alloc::vec![FixedBitSet::with_capacity(nd); n];
    let mut reach_out = alloc::vec![FixedBitSet::with_capacity(nd); n];
    let mut queued = alloc::vec![false; n];
    let mut wl: VecDeque<NodeId> = VecDeque::with_capacity(n);
    for &id in order {
        if !queued[id.index()] {
            queued[id.index()] = true;
            wl.push_back(id);
        }
    }
    while let Some(id) = wl.pop_front() {
        queued[id.index()] = false;
        let mut input = FixedBitSet::with_capacity(nd);
        for e in g.in_edges(id).filter(|e| !e.special) {
            input.union_with(&reach_out[e.src.index()]);
        }
        let mut output = input.clone();
        if let Some(d) = def_of[id.index()] {
            output.difference_with(&var_defs[&defs[d].1.var]);
            output.insert(d);
        }
        reach_in[id.index()] = input;
        if output != reach_out[id.index()] {
            reach_out[id.index()] = output;
            for e in g.out_edges(id).filter(|e| !e.special) {
                if !queued[e.dst.index()] {
                    queued[e.dst.index()] = true;
                    wl.push_back(e.dst);
                }
            }
        }
    }
    ReachingMap { defs, reach_in, var_defs }
}

impl ReachingMap {
    /// Definitions reaching the entry of `id`.
    pub fn reaching(&self, id: NodeId) -> impl Iterator<Item = &Definition> + '_ {
        self.reach_in[id.index()].ones().map(move |i| &self.defs[i].1)
    }

    /// Nodes whose definitions of a variable in `vars` reach `id`.
    pub fn du_nodes<'a, I>(&self, id: NodeId, vars: I) -> Vec<NodeId>
    where
        I: IntoIterator<Item = &'a String>,
    {
        let mut mask = FixedBitSet::with_capacity(self.defs.len());
        for v in vars {
            if let Some(set) = self.var_defs.get(v) {
                mask.union_with(set);
            }
        }
        mask.intersect_with(&self.reach_in[id.index()]);
        mask.ones().map(|i| self.defs[i].0).collect()
    }

    /// `DU(label, vars)`. Unknown labels and variables contribute nothing.
    pub fn du<'a, I>(&self, g: &Cfg, label: Label, vars: I) -> BTreeSet<Definition>
    where
        I: IntoIterator<Item = &'a String>,
    {
        let Some(id) = g.id(label) else { return BTreeSet::new() };
        let vars: BTreeSet<&String> = vars.into_iter().collect();
        self.reaching(id).filter(|d| vars.contains(&d.var)).cloned().collect()
    }

    pub fn du_criterion(&self, g: &Cfg, c: &SlicingCriterion) -> BTreeSet<Definition> {
        self.du(g, c.location, &c.vars)
    }

    /// All definitions of the program, in node order.
    pub fn definitions(&self) -> impl Iterator<Item = &Definition> + '_ {
        self.defs.iter().map(|(_, d)| d)
    }
}

/// `REF(s)`: the variables `s` reads.
pub fn refs(s: &Stmt) -> BTreeSet<String> {
    s.refs()
}

/// `LV(s) = <s, REF(s)>`.
pub fn lv(s: &Stmt) -> SlicingCriterion {
    SlicingCriterion { location: s.label, vars: s.refs() }
}
