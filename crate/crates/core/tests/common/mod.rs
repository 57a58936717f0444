//! Shared proptest strategies: small structured programs rendered as source.

#![allow(dead_code)]

use std::fmt::Write;

use proptest::prelude::*;

const VARS: [&str; 5] = ["a", "b", "c", "x", "y"];

#[derive(Debug, Clone)]
pub enum Ex {
    Var(usize),
    Lit(i64),
    Bin(&'static str, Box<Ex>, Box<Ex>),
}

#[derive(Debug, Clone)]
pub enum St {
    Assign(usize, Ex),
    If(Ex, Vec<St>, Vec<St>),
    /// Bounded loop: an iteration counter caps the trip count.
    While(u8, Ex, Vec<St>),
    Break,
    Continue,
    Skip,
    Call(Ex),
}

fn expr() -> impl Strategy<Value = Ex> {
    let leaf = prop_oneof![(0..VARS.len()).prop_map(Ex::Var), (-2i64..5).prop_map(Ex::Lit)];
    leaf.prop_recursive(2, 6, 2, |inner| {
        (prop::sample::select(vec!["+", "-", "*", "<", "==", "!=", ">=", "&&", "||"]), inner.clone(), inner)
            .prop_map(|(op, l, r)| Ex::Bin(op, Box::new(l), Box::new(r)))
    })
}

fn stmt(calls: bool, jumps: bool) -> impl Strategy<Value = St> {
    let j = if jumps { 1 } else { 0 };
    let leaf = prop_oneof![
        4 => ((0..VARS.len()), expr()).prop_map(|(v, e)| St::Assign(v, e)),
        1 => Just(St::Skip),
        j => Just(St::Break),
        j => Just(St::Continue),
        (if calls { 1 } else { 0 }) => expr().prop_map(St::Call),
    ];
    leaf.prop_recursive(3, 24, 4, |inner| {
        let block = prop::collection::vec(inner, 0..4);
        prop_oneof![
            (expr(), block.clone(), block.clone()).prop_map(|(c, t, e)| St::If(c, t, e)),
            (1u8..4, expr(), block).prop_map(|(n, c, b)| St::While(n, c, b)),
        ]
    })
}

/// Source text of a random program. With `calls`, a procedure `f(p)` is
/// defined and the entry procedure is `main`; `jumps` allows `break` and
/// `continue`.
pub fn program(calls: bool, jumps: bool) -> impl Strategy<Value = String> {
    let body = prop::collection::vec(stmt(calls, jumps), 1..6);
    let callee = prop::collection::vec(stmt(false, jumps), 0..3);
    (body, callee).prop_map(move |(body, callee)| {
        let mut r = Renderer::default();
        if calls {
            r.out.push_str("f(p) {\n");
            r.line(1, "y = p + x;");
            r.block(&callee, 1, false);
            r.out.push_str("}\nmain() {\n");
            r.block(&body, 1, false);
            r.out.push_str("}\n");
        } else {
            r.block(&body, 0, false);
        }
        r.out
    })
}

#[derive(Default)]
struct Renderer {
    out: String,
    loops: usize,
}

fn render_expr(e: &Ex) -> String {
    match e {
        Ex::Var(v) => VARS[*v].to_string(),
        Ex::Lit(n) => n.to_string(),
        Ex::Bin(op, l, r) => format!("({} {op} {})", render_expr(l), render_expr(r)),
    }
}

impl Renderer {
    fn line(&mut self, depth: usize, s: &str) {
        let _ = writeln!(self.out, "{}{s}", "  ".repeat(depth));
    }

    /// Renders statements up to the first one control cannot fall out of;
    /// returns whether the block can complete normally.
    fn block(&mut self, b: &[St], depth: usize, in_loop: bool) -> bool {
        for s in b {
            match s {
                St::Assign(v, e) => self.line(depth, &format!("{} = {};", VARS[*v], render_expr(e))),
                St::Skip => self.line(depth, "skip;"),
                St::Call(e) => self.line(depth, &format!("f({});", render_expr(e))),
                St::Break | St::Continue if !in_loop => self.line(depth, "skip;"),
                St::Break => {
                    self.line(depth, "break;");
                    return false;
                }
                St::Continue => {
                    self.line(depth, "continue;");
                    return false;
                }
                St::If(c, t, e) => {
                    self.line(depth, &format!("if ({}) {{", render_expr(c)));
                    let then_completes = self.block(t, depth + 1, in_loop);
                    if e.is_empty() {
                        self.line(depth, "}");
                    } else {
                        self.line(depth, "} else {");
                        let else_completes = self.block(e, depth + 1, in_loop);
                        self.line(depth, "}");
                        if !then_completes && !else_completes {
                            return false;
                        }
                    }
                }
                St::While(n, c, body) => {
                    let k = format!("k{}", self.loops);
                    self.loops += 1;
                    self.line(depth, &format!("{k} = 0;"));
                    self.line(depth, &format!("while ({k} < {n} && {}) {{", render_expr(c)));
                    self.line(depth + 1, &format!("{k} = {k} + 1;"));
                    self.block(body, depth + 1, true);
                    self.line(depth, "}");
                }
            }
        }
        true
    }
}

/// Inputs over the free variables used by generated programs.
pub fn input() -> impl Strategy<Value = std::collections::BTreeMap<String, i64>> {
    prop::collection::vec(-3i64..4, VARS.len())
        .prop_map(|vals| VARS.iter().map(|v| v.to_string()).zip(vals).collect())
}
