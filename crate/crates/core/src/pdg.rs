//! Program dependence graph: data dependences from reaching definitions plus
//! strong and weak control dependences. Criterion-independent; a criterion's
//! `DU(l, V)` is looked up at slicing time.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::cdeps::{CdEdge, ControlDeps, Strength};
use crate::cfg::{build_cfg, escape, Cfg, NodeId};
use crate::dataflow::{reaching_definitions, ReachingMap};
use crate::lang::{Label, Program};

/// `def` reaches `use_` and supplies `var`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DataEdge {
    pub def: Label,
    pub use_: Label,
    pub var: String,
}

#[derive(Debug, Clone)]
pub struct Pdg {
    cfg: Cfg,
    rm: ReachingMap,
    cd: ControlDeps,
    data_edges: Vec<DataEdge>,
    data_preds: Vec<Vec<NodeId>>,
    strong_preds: Vec<Vec<NodeId>>,
    weak_preds: Vec<Vec<NodeId>>,
}

/// Assembles a PDG from precomputed parts, which must come from `g`.
pub fn build_pdg(g: Cfg, rm: ReachingMap, cd: ControlDeps) -> Pdg {
    let n = g.len();
    let mut data_edges = Vec::new();
    let mut data_preds = alloc::vec![Vec::new(); n];
    for t in g.statement_ids() {
        let info = g.info(t);
        let use_ = g.label(t).expect("statement");
        let mut preds = BTreeSet::new();
        for d in rm.reaching(t).filter(|d| info.refs.contains(&d.var)) {
            data_edges.push(DataEdge { def: d.at, use_, var: d.var.clone() });
            preds.insert(g.id(d.at).expect("definition node"));
        }
        data_preds[t.index()] = preds.into_iter().collect();
    }
    data_edges.sort();
    let mut strong_preds = alloc::vec![BTreeSet::new(); n];
    let mut weak_preds = alloc::vec![BTreeSet::new(); n];
    for e in cd.edges() {
        let (c, d) = (g.id(e.cond).expect("cond"), g.id(e.dependent).expect("dependent"));
        match e.strength {
            Strength::Strong => strong_preds[d.index()].insert(c),
            Strength::Weak => weak_preds[d.index()].insert(c),
        };
    }
    let flat = |v: Vec<BTreeSet<NodeId>>| v.into_iter().map(|s| s.into_iter().collect()).collect();
    Pdg {
        cfg: g,
        rm,
        cd,
        data_edges,
        data_preds,
        strong_preds: flat(strong_preds),
        weak_preds: flat(weak_preds),
    }
}

impl Pdg {
    /// Builds CFG, reaching definitions, control dependences and the PDG of
    /// an inlined program.
    pub fn build(p: &Program) -> Pdg {
        Pdg::from_cfg(build_cfg(p))
    }

    pub fn from_cfg(g: Cfg) -> Pdg {
        let rm = reaching_definitions(&g);
        let cd = ControlDeps::compute(&g);
        build_pdg(g, rm, cd)
    }

    pub fn cfg(&self) -> &Cfg {
        &self.cfg
    }

    pub fn reaching(&self) -> &ReachingMap {
        &self.rm
    }

    pub fn control(&self) -> &ControlDeps {
        &self.cd
    }

    pub fn data_edges(&self) -> &[DataEdge] {
        &self.data_edges
    }

    pub fn control_edges(&self) -> &[CdEdge] {
        self.cd.edges()
    }

    /// Definitions `t` reads from, i.e. the nodes of `DU(LV(t))`.
    pub fn data_preds(&self, t: NodeId) -> &[NodeId] {
        &self.data_preds[t.index()]
    }

    /// Conditions `t` is directly control dependent on.
    pub fn control_preds(&self, t: NodeId, strength: Strength) -> &[NodeId] {
        match strength {
            Strength::Strong => &self.strong_preds[t.index()],
            Strength::Weak => &self.weak_preds[t.index()],
        }
    }

    /// Nodes of `DU(l, V)`.
    pub fn du_nodes<'a, I>(&self, l: NodeId, vars: I) -> Vec<NodeId>
    where
        I: IntoIterator<Item = &'a String>,
    {
        self.rm.du_nodes(l, vars)
    }

    /// Graphviz rendering: solid data edges labeled with the variable, bold
    /// strong and dotted weak control edges labeled with the branch.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph pdg {\n");
        for id in self.cfg.statement_ids() {
            let info = self.cfg.info(id);
            let _ = writeln!(out, "  \"{}\" [label=\"{}: {}\"];", info.node, info.node, escape(&info.text));
        }
        for e in &self.data_edges {
            let _ = writeln!(out, "  \"{}\" -> \"{}\" [style=solid, label=\"{}\"];", e.def, e.use_, e.var);
        }
        for e in self.cd.edges() {
            let style = match e.strength {
                Strength::Strong => "bold",
                Strength::Weak => "dotted",
            };
            let _ = writeln!(out, "  \"{}\" -> \"{}\" [style={style}, label=\"{}\"];", e.cond, e.dependent, e.branch);
        }
        out.push_str("}\n");
        out
    }
}
