//! Control flow graph of an inlined program.
//!
//! One node per statement plus `ENTRY` and `EXIT`. A loop condition is a
//! single node whose false edge leaves the loop; `break` jumps to the loop
//! exit and `continue` to the loop condition. Two special edges,
//! `ENTRY -> EXIT` and `EXIT -> EXIT`, make every maximal path infinite;
//! they matter for post-dominance only.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::{self, Write};

use crate::lang::{expr_to_string, Block, Guard, Label, Program, Rhs, Stmt, StmtKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    pub const ENTRY: NodeId = NodeId(0);
    pub const EXIT: NodeId = NodeId(1);

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    Entry,
    Exit,
    Stmt(Label),
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Entry => f.write_str("ENTRY"),
            Node::Exit => f.write_str("EXIT"),
            Node::Stmt(l) => write!(f, "{l}"),
        }
    }
}

/// Outcome of a two-way branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Branch {
    False,
    True,
}

impl Branch {
    pub const BOTH: [Branch; 2] = [Branch::True, Branch::False];

    pub fn opposite(self) -> Branch {
        match self {
            Branch::True => Branch::False,
            Branch::False => Branch::True,
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::True => "true",
            Branch::False => "false",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeKind {
    Unconditional,
    Cond(Branch),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub src: NodeId,
    pub dst: NodeId,
    pub kind: EdgeKind,
    /// `ENTRY -> EXIT` or `EXIT -> EXIT`.
    pub special: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Entry,
    Exit,
    Assign,
    Cond,
    Skip,
    /// `break` or `continue`.
    Jump,
    /// Only present when building from a program that was not inlined.
    Call,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeInfo {
    pub node: Node,
    pub kind: NodeKind,
    pub def: Option<String>,
    pub refs: BTreeSet<String>,
    pub is_abstract: bool,
    /// Innermost enclosing `if`/`while`.
    pub parent: Option<Label>,
    /// Where control goes when the statement completes normally; for a
    /// jump, where it would go if the jump were deleted.
    pub fallthrough: Option<NodeId>,
    /// Short source rendering, e.g. `while (i < n)`.
    pub text: String,
}

#[derive(Debug, Clone)]
pub struct Cfg {
    nodes: Vec<NodeInfo>,
    edges: Vec<Edge>,
    succ: Vec<Vec<usize>>,
    pred: Vec<Vec<usize>>,
    index: BTreeMap<Label, NodeId>,
}

struct Builder {
    nodes: Vec<NodeInfo>,
    edges: Vec<Edge>,
    index: BTreeMap<Label, NodeId>,
}

fn describe(s: &Stmt) -> String {
    let guard = |g: &Guard| match g {
        Guard::Expr(e) => expr_to_string(e),
        Guard::Abstract => String::from("*"),
    };
    match &s.kind {
        StmtKind::Assign { target, value: Rhs::Expr(e) } => format!("{target} = {}", expr_to_string(e)),
        StmtKind::Assign { target, value: Rhs::Any } => format!("{target} = *"),
        StmtKind::If { cond, .. } => format!("if ({})", guard(cond)),
        StmtKind::While { cond, .. } => format!("while ({})", guard(cond)),
        StmtKind::Break => String::from("break"),
        StmtKind::Continue => String::from("continue"),
        StmtKind::Skip => String::from("skip"),
        StmtKind::Call { callee, .. } => format!("{callee}(...)"),
    }
}

impl Builder {
    fn add_nodes(&mut self, block: &[Stmt], parent: Option<Label>) {
        for s in block {
            let kind = match &s.kind {
                StmtKind::Assign { .. } => NodeKind::Assign,
                StmtKind::If { .. } | StmtKind::While { .. } => NodeKind::Cond,
                StmtKind::Break | StmtKind::Continue => NodeKind::Jump,
                StmtKind::Skip => NodeKind::Skip,
                StmtKind::Call { .. } => NodeKind::Call,
            };
            let id = NodeId(self.nodes.len() as u32);
            self.index.insert(s.label, id);
            self.nodes.push(NodeInfo {
                node: Node::Stmt(s.label),
                kind,
                def: s.def().map(String::from),
                refs: s.refs(),
                is_abstract: s.is_abstract(),
                parent,
                fallthrough: None,
                text: describe(s),
            });
            for child in s.children() {
                self.add_nodes(child, Some(s.label));
            }
        }
    }

    fn edge(&mut self, src: NodeId, dst: NodeId, kind: EdgeKind) {
        self.edges.push(Edge { src, dst, kind, special: false });
    }

    /// Wires `block` so that it falls through to `next`; returns its first
    /// node (or `next` when empty). `lp` is (loop condition, loop exit).
    fn lower(&mut self, block: &[Stmt], next: NodeId, lp: Option<(NodeId, NodeId)>) -> NodeId {
        let mut cur = next;
        for s in block.iter().rev() {
            let id = self.index[&s.label];
            self.nodes[id.index()].fallthrough = Some(cur);
            match &s.kind {
                StmtKind::If { then_branch, else_branch, .. } => {
                    let t = self.lower(then_branch, cur, lp);
                    let f = self.lower(else_branch, cur, lp);
                    self.edge(id, t, EdgeKind::Cond(Branch::True));
                    self.edge(id, f, EdgeKind::Cond(Branch::False));
                }
                StmtKind::While { body, .. } => {
                    let b = self.lower(body, id, Some((id, cur)));
                    self.edge(id, b, EdgeKind::Cond(Branch::True));
                    self.edge(id, cur, EdgeKind::Cond(Branch::False));
                }
                StmtKind::Break => {
                    let (_, exit) = lp.expect("break inside a loop");
                    self.edge(id, exit, EdgeKind::Unconditional);
                }
                StmtKind::Continue => {
                    let (head, _) = lp.expect("continue inside a loop");
                    self.edge(id, head, EdgeKind::Unconditional);
                }
                _ => self.edge(id, cur, EdgeKind::Unconditional),
            }
            cur = id;
        }
        cur
    }
}

/// Builds the CFG of the entry procedure of `p`. `p` is expected to be
/// inlined; leftover calls become opaque single-successor nodes.
pub fn build_cfg(p: &Program) -> Cfg {
    let special = |kind| NodeInfo {
        node: kind,
        kind: if kind == Node::Entry { NodeKind::Entry } else { NodeKind::Exit },
        def: None,
        refs: BTreeSet::new(),
        is_abstract: false,
        parent: None,
        fallthrough: None,
        text: format!("{kind}"),
    };
    let mut b = Builder { nodes: alloc::vec![special(Node::Entry), special(Node::Exit)], edges: Vec::new(), index: BTreeMap::new() };
    let body: &Block = &p.entry_procedure().body;
    b.add_nodes(body, None);
    let first = b.lower(body, NodeId::EXIT, None);
    b.edge(NodeId::ENTRY, first, EdgeKind::Unconditional);
    b.edges.push(Edge { src: NodeId::ENTRY, dst: NodeId::EXIT, kind: EdgeKind::Unconditional, special: true });
    b.edges.push(Edge { src: NodeId::EXIT, dst: NodeId::EXIT, kind: EdgeKind::Unconditional, special: true });
    b.edges.sort();
    let n = b.nodes.len();
    let mut succ = alloc::vec![Vec::new(); n];
    let mut pred = alloc::vec![Vec::new(); n];
    for (i, e) in b.edges.iter().enumerate() {
        succ[e.src.index()].push(i);
        pred[e.dst.index()].push(i);
    }
    Cfg { nodes: b.nodes, edges: b.edges, succ, pred, index: b.index }
}

impl Cfg {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.len() == 2
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len() as u32).map(NodeId)
    }

    /// Statement nodes in pre-order.
    pub fn statement_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        (2..self.nodes.len() as u32).map(NodeId)
    }

    pub fn info(&self, id: NodeId) -> &NodeInfo {
        &self.nodes[id.index()]
    }

    pub fn id(&self, label: Label) -> Option<NodeId> {
        self.index.get(&label).copied()
    }

    pub fn label(&self, id: NodeId) -> Option<Label> {
        match self.nodes[id.index()].node {
            Node::Stmt(l) => Some(l),
            _ => None,
        }
    }

    pub fn labels(&self) -> impl Iterator<Item = Label> + '_ {
        self.index.keys().copied()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Outgoing edges, special edges included.
    pub fn out_edges(&self, id: NodeId) -> impl Iterator<Item = &Edge> + '_ {
        self.succ[id.index()].iter().map(move |&i| &self.edges[i])
    }

    pub fn in_edges(&self, id: NodeId) -> impl Iterator<Item = &Edge> + '_ {
        self.pred[id.index()].iter().map(move |&i| &self.edges[i])
    }

    /// Successor along a branch of a condition node.
    pub fn branch_target(&self, cond: NodeId, branch: Branch) -> Option<NodeId> {
        self.out_edges(cond).find(|e| e.kind == EdgeKind::Cond(branch)).map(|e| e.dst)
    }

    pub fn is_condition(&self, id: NodeId) -> bool {
        self.nodes[id.index()].kind == NodeKind::Cond
    }

    /// Reverse post-order over ordinary (non-special) edges from ENTRY.
    pub fn reverse_post_order(&self) -> Vec<NodeId> {
        let n = self.nodes.len();
        let mut seen = alloc::vec![false; n];
        let mut post = Vec::with_capacity(n);
        let mut stack: Vec<(NodeId, usize)> = alloc::vec![(NodeId::ENTRY, 0)];
        seen[0] = true;
        while let Some(&mut (node, ref mut k)) = stack.last_mut() {
            let succ = &self.succ[node.index()];
            if *k < succ.len() {
                let e = self.edges[succ[*k]];
                *k += 1;
                if !e.special && !seen[e.dst.index()] {
                    seen[e.dst.index()] = true;
                    stack.push((e.dst, 0));
                }
            } else {
                post.push(node);
                stack.pop();
            }
        }
        for id in self.node_ids() {
            if !seen[id.index()] {
                post.insert(0, id);
            }
        }
        post.reverse();
        post
    }

    /// Graphviz rendering; node ids are labels, condition edges carry
    /// `label="true"|"false"`.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph cfg {\n");
        for info in &self.nodes {
            let shape = if info.kind == NodeKind::Cond { "diamond" } else { "box" };
            let _ = writeln!(out, "  \"{}\" [shape={shape}, tooltip=\"{}\"];", info.node, escape(&info.text));
        }
        for e in &self.edges {
            let (s, d) = (self.nodes[e.src.index()].node, self.nodes[e.dst.index()].node);
            match e.kind {
                EdgeKind::Cond(b) => {
                    let _ = writeln!(out, "  \"{s}\" -> \"{d}\" [label=\"{b}\"];");
                }
                EdgeKind::Unconditional if e.special => {
                    let _ = writeln!(out, "  \"{s}\" -> \"{d}\" [style=dashed];");
                }
                EdgeKind::Unconditional => {
                    let _ = writeln!(out, "  \"{s}\" -> \"{d}\";");
                }
            }
        }
        out.push_str("}\n");
        out
    }
}

pub(crate) fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}
