//! Weak and strong post-dominance, strong and weak control dependence, and
//! transitive control-dependence queries.
//!
//! Weak post-dominance: every path to `EXIT` passes through the dominator.
//! Strong post-dominance: every infinite path does. Because `EXIT` has a
//! self-loop, every maximal path is infinite. `n2` strongly post-dominates
//! `n1 != n2` iff deleting `n2` leaves no cycle reachable from `n1`.
//!
//! Only `if`/`while` statements act as controllers; the `ENTRY -> EXIT`
//! pseudo-predicate is not reported.

use alloc::collections::{BTreeSet, VecDeque};
use alloc::vec::Vec;
use core::fmt;

use fixedbitset::FixedBitSet;

use crate::cfg::{Branch, Cfg, EdgeKind, NodeId};
use crate::lang::Label;

#[derive(Debug, Clone)]
pub struct PostDomRelation {
    /// `weak[n]` holds every node that weakly post-dominates `n`.
    weak: Vec<FixedBitSet>,
    strong: Vec<FixedBitSet>,
}

impl PostDomRelation {
    /// Does `n2` weakly post-dominate `n1`? Reflexive.
    pub fn weak(&self, n2: NodeId, n1: NodeId) -> bool {
        self.weak[n1.index()].contains(n2.index())
    }

    /// Does `n2` strongly post-dominate `n1`? Reflexive.
    pub fn strong(&self, n2: NodeId, n1: NodeId) -> bool {
        self.strong[n1.index()].contains(n2.index())
    }
}

pub fn post_dominators(g: &Cfg) -> PostDomRelation {
    PostDomRelation { weak: weak_post_dominators(g), strong: strong_post_dominators(g) }
}

fn weak_post_dominators(g: &Cfg) -> Vec<FixedBitSet> {
    let n = g.len();
    let mut full = FixedBitSet::with_capacity(n);
    full.insert_range(..);
    let mut pd = alloc::vec![full; n];
    pd[NodeId::EXIT.index()].clear();
    pd[NodeId::EXIT.index()].insert(NodeId::EXIT.index());
    let order: Vec<NodeId> = g.reverse_post_order().into_iter().rev().collect();
    let mut changed = true;
    while changed {
        changed = false;
        for &id in &order {
            if id == NodeId::EXIT {
                continue;
            }
            let mut acc: Option<FixedBitSet> = None;
            for e in g.out_edges(id) {
                let s = &pd[e.dst.index()];
                match &mut acc {
                    None => acc = Some(s.clone()),
                    Some(a) => a.intersect_with(s),
                }
            }
            let mut next = acc.unwrap_or_else(|| FixedBitSet::with_capacity(n));
            next.insert(id.index());
            if next != pd[id.index()] {
                pd[id.index()] = next;
                changed = true;
            }
        }
    }
    pd
}

/// Nodes from which every path is finite once `removed` is deleted.
fn finite_nodes(g: &Cfg, removed: NodeId) -> FixedBitSet {
    let n = g.len();
    let mut live_succ = alloc::vec![0usize; n];
    let mut finite = FixedBitSet::with_capacity(n);
    let mut queue = VecDeque::new();
    for id in g.node_ids() {
        if id == removed {
            continue;
        }
        live_succ[id.index()] = g.out_edges(id).filter(|e| e.dst != removed).count();
        if live_succ[id.index()] == 0 {
            finite.insert(id.index());
            queue.push_back(id);
        }
    }
    while let Some(id) = queue.pop_front() {
        for e in g.in_edges(id) {
            let p = e.src;
            if p == removed || finite.contains(p.index()) {
                continue;
            }
            live_succ[p.index()] -= 1;
            if live_succ[p.index()] == 0 {
                finite.insert(p.index());
                queue.push_back(p);
            }
        }
    }
    finite
}

fn strong_post_dominators(g: &Cfg) -> Vec<FixedBitSet> {
    let n = g.len();
    let mut spd = alloc::vec![FixedBitSet::with_capacity(n); n];
    for (i, set) in spd.iter_mut().enumerate() {
        set.insert(i);
    }
    for n2 in g.node_ids() {
        for n1 in finite_nodes(g, n2).ones() {
            spd[n1].insert(n2.index());
        }
    }
    spd
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Strength {
    Strong,
    Weak,
}

impl fmt::Display for Strength {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strength::Strong => "strong",
            Strength::Weak => "weak",
        })
    }
}

/// `dependent` is control dependent on the `branch` edge of `cond`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CdEdge {
    pub cond: Label,
    pub branch: Branch,
    pub dependent: Label,
    pub strength: Strength,
}

impl fmt::Display for CdEdge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{} -> {} ({})", self.cond, self.branch, self.dependent, self.strength)
    }
}

/// Strong and weak control dependences between statements. A statement may
/// depend on the same edge both strongly and weakly; both are listed.
pub fn control_dependence(g: &Cfg, pd: &PostDomRelation) -> Vec<CdEdge> {
    let mut out = Vec::new();
    for e in g.edges() {
        let EdgeKind::Cond(branch) = e.kind else { continue };
        let cond = g.label(e.src).expect("condition is a statement");
        for n3 in g.statement_ids() {
            let dependent = g.label(n3).expect("statement");
            if pd.weak(n3, e.dst) && (n3 == e.src || !pd.weak(n3, e.src)) {
                out.push(CdEdge { cond, branch, dependent, strength: Strength::Strong });
            }
            if pd.strong(n3, e.dst) && (n3 == e.src || !pd.strong(n3, e.src)) {
                out.push(CdEdge { cond, branch, dependent, strength: Strength::Weak });
            }
        }
    }
    out.sort();
    out
}

/// `<c, e, strong_only>`: `c --e--> s` when `strong_only`, `c ~~e~~> s`
/// otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CondTriple {
    pub cond: Label,
    pub edge: Branch,
    pub strong_only: bool,
}

/// The four `<c, e, b>` memberships of one condition, packed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CondFlags(u8);

impl CondFlags {
    const fn bit(edge: Branch, strong_only: bool) -> u8 {
        1 << ((edge as u8) * 2 + strong_only as u8)
    }

    pub fn has(self, edge: Branch, strong_only: bool) -> bool {
        self.0 & Self::bit(edge, strong_only) != 0
    }

    fn set(&mut self, edge: Branch, strong_only: bool) {
        self.0 |= Self::bit(edge, strong_only);
    }

    /// `c --> s` through either edge.
    pub fn any_strong(self) -> bool {
        self.has(Branch::True, true) || self.has(Branch::False, true)
    }
}

/// Per statement, the conditions it depends on directly (`conds`) and
/// transitively (`tcntrls`), both keyed by condition node.
#[derive(Debug, Clone)]
pub struct ControlDeps {
    pd: PostDomRelation,
    edges: Vec<CdEdge>,
    labels: Vec<Option<Label>>,
    direct: Vec<Vec<(NodeId, CondFlags)>>,
    transitive: Vec<Vec<(NodeId, CondFlags)>>,
}

fn lookup(list: &[(NodeId, CondFlags)], c: NodeId) -> CondFlags {
    match list.binary_search_by_key(&c, |(n, _)| *n) {
        Ok(i) => list[i].1,
        Err(_) => CondFlags::default(),
    }
}

impl ControlDeps {
    pub fn compute(g: &Cfg) -> ControlDeps {
        let pd = post_dominators(g);
        let edges = control_dependence(g, &pd);
        let n = g.len();
        let labels: Vec<Option<Label>> = g.node_ids().map(|id| g.label(id)).collect();
        let node = |l: Label| g.id(l).expect("label of this cfg");

        // out[c][branch] = (strong dependents, any dependents)
        let mut strong_out = alloc::vec![Vec::new(); n];
        let mut any_out = alloc::vec![Vec::new(); n];
        let mut direct_flags = alloc::vec![Vec::<(NodeId, CondFlags)>::new(); n];
        for e in &edges {
            let (c, d) = (node(e.cond), node(e.dependent));
            if e.strength == Strength::Strong {
                strong_out[c.index()].push((e.branch, d));
            }
            any_out[c.index()].push((e.branch, d));
            let list = &mut direct_flags[d.index()];
            let i = match list.binary_search_by_key(&c, |(k, _)| *k) {
                Ok(i) => i,
                Err(i) => {
                    list.insert(i, (c, CondFlags::default()));
                    i
                }
            };
            list[i].1.set(e.branch, false);
            if e.strength == Strength::Strong {
                list[i].1.set(e.branch, true);
            }
        }

        let mut transitive = alloc::vec![Vec::<(NodeId, CondFlags)>::new(); n];
        let reach = |adj: &Vec<Vec<(Branch, NodeId)>>, c: NodeId, first: Branch| -> FixedBitSet {
            let mut seen = FixedBitSet::with_capacity(n);
            let mut queue = VecDeque::new();
            // Chains never re-enter their origin condition.
            seen.insert(c.index());
            for &(b, d) in &adj[c.index()] {
                if b == first && !seen.put(d.index()) {
                    queue.push_back(d);
                }
            }
            while let Some(x) = queue.pop_front() {
                for &(_, d) in &adj[x.index()] {
                    if !seen.put(d.index()) {
                        queue.push_back(d);
                    }
                }
            }
            seen.set(c.index(), false);
            seen
        };
        for c in g.statement_ids().filter(|&c| g.is_condition(c)) {
            for branch in Branch::BOTH {
                for (adj, strong_only) in [(&strong_out, true), (&any_out, false)] {
                    for s in reach(adj, c, branch).ones() {
                        let list = &mut transitive[s];
                        match list.last_mut() {
                            Some((k, f)) if *k == c => f.set(branch, strong_only),
                            _ => {
                                let mut f = CondFlags::default();
                                f.set(branch, strong_only);
                                list.push((c, f));
                            }
                        }
                    }
                }
            }
        }
        ControlDeps { pd, edges, labels, direct: direct_flags, transitive }
    }

    pub fn post_dominance(&self) -> &PostDomRelation {
        &self.pd
    }

    pub fn edges(&self) -> &[CdEdge] {
        &self.edges
    }

    fn triples(&self, list: &[(NodeId, CondFlags)]) -> BTreeSet<CondTriple> {
        let mut out = BTreeSet::new();
        for &(c, f) in list {
            let cond = self.labels[c.index()].expect("condition is a statement");
            for edge in Branch::BOTH {
                for strong_only in [true, false] {
                    if f.has(edge, strong_only) {
                        out.insert(CondTriple { cond, edge, strong_only });
                    }
                }
            }
        }
        out
    }

    /// Direct dependences of `s`.
    pub fn conds(&self, s: NodeId) -> BTreeSet<CondTriple> {
        self.triples(&self.direct[s.index()])
    }

    /// Transitive dependences of `s`, excluding `s` itself.
    pub fn tcntrls(&self, s: NodeId) -> BTreeSet<CondTriple> {
        self.triples(&self.transitive[s.index()])
    }

    /// Conditions in `tcntrls(s)` with their flags, ordered by node.
    pub fn tcntrls_flags(&self, s: NodeId) -> &[(NodeId, CondFlags)] {
        &self.transitive[s.index()]
    }

    pub fn flags(&self, s: NodeId, c: NodeId) -> CondFlags {
        lookup(&self.transitive[s.index()], c)
    }

    /// Conditions `c` with `c --> s`.
    pub fn strong_controllers(&self, s: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.transitive[s.index()].iter().filter(|(_, f)| f.any_strong()).map(|(c, _)| *c)
    }

    /// Conditions on which `s` directly depends with the given strength.
    pub fn direct_controllers(&self, s: NodeId, strength: Strength) -> impl Iterator<Item = NodeId> + '_ {
        self.direct[s.index()]
            .iter()
            .filter(move |(_, f)| match strength {
                Strength::Strong => f.any_strong(),
                Strength::Weak => f.has(Branch::True, false) || f.has(Branch::False, false),
            })
            .map(|(c, _)| *c)
    }
}
