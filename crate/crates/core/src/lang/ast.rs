//! Labeled syntax tree of the mini language.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Unique statement label. Labels survive augmentation, inlining and slicing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label(pub u32);

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    /// Binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne => 3,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div => 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Int(i64),
    Var(String),
    Unary(UnOp, alloc::boxed::Box<Expr>),
    Binary(BinOp, alloc::boxed::Box<Expr>, alloc::boxed::Box<Expr>),
}

impl Expr {
    /// Free variables of the expression.
    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub(crate) fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Int(_) => {}
            Expr::Var(v) => {
                out.insert(v.clone());
            }
            Expr::Unary(_, e) => e.collect_vars(out),
            Expr::Binary(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub(crate) fn collect_literals(&self, out: &mut BTreeSet<i64>) {
        match self {
            Expr::Int(n) => {
                out.insert(*n);
            }
            Expr::Var(_) => {}
            Expr::Unary(_, e) => e.collect_literals(out),
            Expr::Binary(_, a, b) => {
                a.collect_literals(out);
                b.collect_literals(out);
            }
        }
    }

    pub(crate) fn rename(&self, map: &BTreeMap<String, String>) -> Expr {
        match self {
            Expr::Int(n) => Expr::Int(*n),
            Expr::Var(v) => Expr::Var(map.get(v).cloned().unwrap_or_else(|| v.clone())),
            Expr::Unary(op, e) => Expr::Unary(*op, alloc::boxed::Box::new(e.rename(map))),
            Expr::Binary(op, a, b) => Expr::Binary(
                *op,
                alloc::boxed::Box::new(a.rename(map)),
                alloc::boxed::Box::new(b.rename(map)),
            ),
        }
    }
}

/// Condition of an `if` or `while`; `Abstract` is printed as `*` and
/// evaluates nondeterministically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Guard {
    Expr(Expr),
    Abstract,
}

/// Right-hand side of an assignment; `Any` is printed as `*` and assigns an
/// arbitrary value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rhs {
    Expr(Expr),
    Any,
}

pub type Block = Vec<Stmt>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stmt {
    pub label: Label,
    /// 1-based source line where the statement starts; 0 for synthesized
    /// statements.
    pub line: u32,
    pub kind: StmtKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StmtKind {
    Assign { target: String, value: Rhs },
    If { cond: Guard, then_branch: Block, else_branch: Block },
    While { cond: Guard, body: Block },
    Break,
    Continue,
    Call { callee: String, args: Vec<Expr> },
    Skip,
}

impl Stmt {
    pub fn new(label: Label, line: u32, kind: StmtKind) -> Self {
        Stmt { label, line, kind }
    }

    pub fn is_condition(&self) -> bool {
        matches!(self.kind, StmtKind::If { .. } | StmtKind::While { .. })
    }

    pub fn is_abstract(&self) -> bool {
        matches!(
            self.kind,
            StmtKind::Assign { value: Rhs::Any, .. }
                | StmtKind::If { cond: Guard::Abstract, .. }
                | StmtKind::While { cond: Guard::Abstract, .. }
        )
    }

    /// Variables whose values the statement reads (`REF`).
    pub fn refs(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        match &self.kind {
            StmtKind::Assign { value: Rhs::Expr(e), .. } => e.collect_vars(&mut out),
            StmtKind::If { cond: Guard::Expr(e), .. } | StmtKind::While { cond: Guard::Expr(e), .. } => {
                e.collect_vars(&mut out)
            }
            StmtKind::Call { args, .. } => args.iter().for_each(|a| a.collect_vars(&mut out)),
            _ => {}
        }
        out
    }

    /// Variable defined by the statement, if any.
    pub fn def(&self) -> Option<&str> {
        match &self.kind {
            StmtKind::Assign { target, .. } => Some(target),
            _ => None,
        }
    }

    /// Nested blocks, in source order.
    pub fn children(&self) -> impl Iterator<Item = &Block> {
        let (a, b): (Option<&Block>, Option<&Block>) = match &self.kind {
            StmtKind::If { then_branch, else_branch, .. } => (Some(then_branch), Some(else_branch)),
            StmtKind::While { body, .. } => (Some(body), None),
            _ => (None, None),
        };
        a.into_iter().chain(b)
    }
}

/// Pre-order walk over a block, calling `f` with each statement.
pub fn walk<'a>(block: &'a [Stmt], f: &mut impl FnMut(&'a Stmt)) {
    for s in block {
        f(s);
        for child in s.children() {
            walk(child, f);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Procedure {
    pub name: String,
    pub params: Vec<String>,
    pub body: Block,
    /// Line of the header; 0 for the implicit top-level procedure.
    pub line: u32,
}

/// Where an inlined statement came from: the call site it was expanded at
/// and the statement of the callee it copies (`None` for the synthesized
/// parameter bindings).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Origin {
    pub call_site: Label,
    pub callee: Option<Label>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub procedures: Vec<Procedure>,
    pub entry: String,
    /// True when the entry procedure was written as bare top-level
    /// statements rather than a named definition.
    pub implicit_entry: bool,
    pub origins: BTreeMap<Label, Origin>,
}

/// Name of the procedure synthesized from top-level statements.
pub const IMPLICIT_ENTRY: &str = "main";

impl Program {
    pub fn procedure(&self, name: &str) -> Option<&Procedure> {
        self.procedures.iter().find(|p| p.name == name)
    }

    pub fn entry_procedure(&self) -> &Procedure {
        self.procedure(&self.entry).expect("entry procedure exists")
    }

    pub(crate) fn entry_procedure_mut(&mut self) -> &mut Procedure {
        let entry = self.entry.clone();
        self.procedures
            .iter_mut()
            .find(|p| p.name == entry)
            .expect("entry procedure exists")
    }

    /// Every statement of every procedure, pre-order.
    pub fn statements(&self) -> Vec<&Stmt> {
        let mut out = Vec::new();
        for p in &self.procedures {
            walk(&p.body, &mut |s| out.push(s));
        }
        out
    }

    pub fn labels(&self) -> BTreeSet<Label> {
        self.statements().into_iter().map(|s| s.label).collect()
    }

    pub fn max_label(&self) -> u32 {
        self.statements().iter().map(|s| s.label.0).max().unwrap_or(0)
    }

    pub fn find(&self, label: Label) -> Option<&Stmt> {
        self.statements().into_iter().find(|s| s.label == label)
    }

    /// Variables of the program other than callee parameters.
    pub fn globals(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for p in &self.procedures {
            let mut vars = BTreeSet::new();
            walk(&p.body, &mut |s| {
                vars.extend(s.refs());
                if let Some(d) = s.def() {
                    vars.insert(String::from(d));
                }
            });
            if p.name == self.entry {
                vars.extend(p.params.iter().cloned());
            } else {
                for param in &p.params {
                    vars.remove(param);
                }
            }
            out.extend(vars);
        }
        out
    }

    /// Integer literals appearing anywhere in the program.
    pub fn literals(&self) -> BTreeSet<i64> {
        let mut out = BTreeSet::new();
        for s in self.statements() {
            match &s.kind {
                StmtKind::Assign { value: Rhs::Expr(e), .. }
                | StmtKind::If { cond: Guard::Expr(e), .. }
                | StmtKind::While { cond: Guard::Expr(e), .. } => e.collect_literals(&mut out),
                StmtKind::Call { args, .. } => args.iter().for_each(|a| a.collect_literals(&mut out)),
                _ => {}
            }
        }
        out
    }

    /// Follows inlining origins back to the label written in the source.
    pub fn source_label(&self, label: Label) -> Label {
        let mut cur = label;
        while let Some(o) = self.origins.get(&cur) {
            match o.callee {
                Some(l) => cur = l,
                None => return o.call_site,
            }
        }
        cur
    }

    /// Labels of the statements enclosing `label` (innermost first).
    pub fn enclosing(&self, label: Label) -> Vec<Label> {
        fn go(block: &[Stmt], target: Label, stack: &mut Vec<Label>) -> bool {
            for s in block {
                if s.label == target {
                    return true;
                }
                stack.push(s.label);
                for child in s.children() {
                    if go(child, target, stack) {
                        return true;
                    }
                }
                stack.pop();
            }
            false
        }
        for p in &self.procedures {
            let mut stack = Vec::new();
            if go(&p.body, label, &mut stack) {
                stack.reverse();
                return stack;
            }
        }
        Vec::new()
    }
}
