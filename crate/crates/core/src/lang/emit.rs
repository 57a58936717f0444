//! Pretty printer. Output always re-parses; with labels enabled every
//! statement carries its `@N` prefix so the parse is label-preserving.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use core::fmt::Write;

use super::ast::*;
use super::error::Error;
use super::transform::{subprogram, Abstraction};

fn expr(out: &mut String, e: &Expr, parent: u8, right: bool) {
    match e {
        Expr::Int(n) => {
            let _ = write!(out, "{n}");
        }
        Expr::Var(v) => out.push_str(v),
        Expr::Unary(op, inner) => {
            out.push(if *op == UnOp::Neg { '-' } else { '!' });
            let wrap = matches!(**inner, Expr::Binary(..)) || matches!(**inner, Expr::Int(n) if n < 0);
            if wrap {
                out.push('(');
            }
            expr(out, inner, 7, false);
            if wrap {
                out.push(')');
            }
        }
        Expr::Binary(op, a, b) => {
            let prec = op.precedence();
            let wrap = prec < parent || (right && prec == parent);
            if wrap {
                out.push('(');
            }
            expr(out, a, prec, false);
            let _ = write!(out, " {} ", op.symbol());
            expr(out, b, prec, true);
            if wrap {
                out.push(')');
            }
        }
    }
}

pub fn expr_to_string(e: &Expr) -> String {
    let mut s = String::new();
    expr(&mut s, e, 0, false);
    s
}

fn guard(out: &mut String, g: &Guard) {
    match g {
        Guard::Expr(e) => expr(out, e, 0, false),
        Guard::Abstract => out.push('*'),
    }
}

struct Printer {
    out: String,
    labels: bool,
}

impl Printer {
    fn indent(&mut self, depth: usize) {
        for _ in 0..depth {
            self.out.push_str("    ");
        }
    }

    fn block(&mut self, block: &[Stmt], depth: usize) {
        for s in block {
            self.stmt(s, depth);
        }
    }

    fn braced(&mut self, block: &[Stmt], depth: usize) {
        if block.is_empty() {
            self.out.push_str("{ }");
        } else {
            self.out.push_str("{\n");
            self.block(block, depth + 1);
            self.indent(depth);
            self.out.push('}');
        }
    }

    fn stmt(&mut self, s: &Stmt, depth: usize) {
        self.indent(depth);
        if self.labels {
            let _ = write!(self.out, "@{} ", s.label);
        }
        match &s.kind {
            StmtKind::Assign { target, value } => {
                let _ = write!(self.out, "{target} = ");
                match value {
                    Rhs::Expr(e) => expr(&mut self.out, e, 0, false),
                    Rhs::Any => self.out.push('*'),
                }
                self.out.push(';');
            }
            StmtKind::If { cond, then_branch, else_branch } => {
                self.out.push_str("if (");
                guard(&mut self.out, cond);
                self.out.push_str(") ");
                self.braced(then_branch, depth);
                if !else_branch.is_empty() {
                    self.out.push_str(" else ");
                    self.braced(else_branch, depth);
                }
            }
            StmtKind::While { cond, body } => {
                self.out.push_str("while (");
                guard(&mut self.out, cond);
                self.out.push_str(") ");
                self.braced(body, depth);
            }
            StmtKind::Break => self.out.push_str("break;"),
            StmtKind::Continue => self.out.push_str("continue;"),
            StmtKind::Skip => self.out.push_str("skip;"),
            StmtKind::Call { callee, args } => {
                let _ = write!(self.out, "{callee}(");
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        self.out.push_str(", ");
                    }
                    expr(&mut self.out, a, 0, false);
                }
                self.out.push_str(");");
            }
        }
        self.out.push('\n');
    }
}

/// Prints a whole program. The implicit entry procedure prints as bare
/// top-level statements.
pub fn print_program(p: &Program, labels: bool) -> String {
    let mut pr = Printer { out: String::new(), labels };
    let mut first = true;
    for proc in &p.procedures {
        if !first {
            pr.out.push('\n');
        }
        first = false;
        if p.implicit_entry && proc.name == p.entry {
            pr.block(&proc.body, 0);
            continue;
        }
        let _ = write!(pr.out, "{}(", proc.name);
        for (i, param) in proc.params.iter().enumerate() {
            if i > 0 {
                pr.out.push_str(", ");
            }
            pr.out.push_str(param);
        }
        pr.out.push_str(") ");
        pr.braced(&proc.body, 0);
        pr.out.push('\n');
    }
    pr.out
}

/// Prints the subprogram of `p` made of `retained` plus abstracted
/// statements, with labels.
pub fn emit(
    p: &Program,
    retained: &BTreeSet<Label>,
    abstractions: &BTreeMap<Label, Abstraction>,
) -> Result<String, Error> {
    Ok(print_program(&subprogram(p, retained, abstractions)?, true))
}
