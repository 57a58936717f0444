//! Lexer and recursive-descent parser.
//!
//! A file is a sequence of procedure definitions `name(a, b) { ... }` and
//! top-level statements. Top-level statements form an implicit entry
//! procedure; otherwise the entry is `main`, or the first procedure when no
//! `main` exists. Statements may carry an explicit `@N` label; unlabeled
//! statements are numbered in source order after the largest explicit label.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::ast::*;
use super::error::{Error, Pos};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Int(i64),
    Ident(String),
    At(u32),
    Kw(&'static str),
    Sym(&'static str),
    Eof,
}

const KEYWORDS: [&str; 8] = ["if", "else", "while", "break", "continue", "skip", "goto", "return"];
const SYMBOLS: [&str; 22] = [
    "&&", "||", "==", "!=", "<=", ">=", "(", ")", "{", "}", ";", ",", "=", "<", ">", "+", "-", "*", "/", "!",
    "@", "%",
];

fn lex(src: &str) -> Result<Vec<(Tok, Pos)>, Error> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    while i < bytes.len() {
        let c = bytes[i];
        let pos = Pos { line, col };
        if c == b'\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == b'/' && bytes.get(i + 1) == Some(&b'/') {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let text = &src[start..i];
            let n = text.parse::<i64>().map_err(|_| Error::Syntax {
                pos,
                message: format!("integer literal `{text}` out of range"),
            })?;
            col += (i - start) as u32;
            out.push((Tok::Int(n), pos));
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            let text = &src[start..i];
            col += (i - start) as u32;
            match KEYWORDS.iter().find(|k| **k == text) {
                Some(k) => out.push((Tok::Kw(k), pos)),
                None => out.push((Tok::Ident(text.to_string()), pos)),
            }
            continue;
        }
        if c == b'@' {
            let start = i + 1;
            let mut j = start;
            while j < bytes.len() && bytes[j].is_ascii_digit() {
                j += 1;
            }
            let n = src[start..j].parse::<u32>().map_err(|_| Error::Syntax {
                pos,
                message: "expected label number after `@`".into(),
            })?;
            if n == 0 {
                return Err(Error::Syntax { pos, message: "labels start at @1".into() });
            }
            col += (j - i) as u32;
            i = j;
            out.push((Tok::At(n), pos));
            continue;
        }
        match SYMBOLS.iter().find(|s| src[i..].starts_with(**s)) {
            Some(s) if *s != "@" && *s != "%" => {
                i += s.len();
                col += s.len() as u32;
                out.push((Tok::Sym(s), pos));
            }
            _ => {
                let ch = src[i..].chars().next().unwrap_or('?');
                return Err(Error::Syntax { pos, message: format!("unexpected character `{ch}`") });
            }
        }
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    /// Explicit labels seen so far, to reject duplicates.
    explicit: BTreeSet<u32>,
    pending: u32,
    loop_depth: usize,
}

/// A statement whose label may still be provisional.
type Pending = Stmt;
/// Unlabeled statements get `PENDING + n` (n in source order) until the
/// largest explicit label is known.
const PENDING: u32 = 1 << 31;

impl Parser {
    fn peek(&self) -> &Tok {
        self.peek_at(0)
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let idx = (self.at + k).min(self.toks.len() - 1);
        &self.toks[idx].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at.min(self.toks.len() - 1)].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.peek().clone();
        self.at += 1;
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, Error> {
        Err(Error::Syntax { pos: self.pos(), message: message.into() })
    }

    fn describe(t: &Tok) -> String {
        match t {
            Tok::Int(n) => format!("`{n}`"),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::At(n) => format!("`@{n}`"),
            Tok::Kw(k) | Tok::Sym(k) => format!("`{k}`"),
            Tok::Eof => "end of input".into(),
        }
    }

    fn expect(&mut self, sym: &'static str) -> Result<(), Error> {
        if *self.peek() == Tok::Sym(sym) {
            self.bump();
            Ok(())
        } else {
            let found = Self::describe(self.peek());
            self.error(format!("expected `{sym}`, found {found}"))
        }
    }

    fn eat(&mut self, sym: &'static str) -> bool {
        if *self.peek() == Tok::Sym(sym) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Result<String, Error> {
        match self.bump() {
            Tok::Ident(s) => Ok(s),
            t => {
                self.at -= 1;
                self.error(format!("expected identifier, found {}", Self::describe(&t)))
            }
        }
    }

    fn is_proc_def(&self) -> bool {
        if !matches!(self.peek(), Tok::Ident(_)) || *self.peek_at(1) != Tok::Sym("(") {
            return false;
        }
        let mut k = 2;
        let mut depth = 1;
        loop {
            match self.peek_at(k) {
                Tok::Sym("(") => depth += 1,
                Tok::Sym(")") => {
                    depth -= 1;
                    if depth == 0 {
                        return *self.peek_at(k + 1) == Tok::Sym("{");
                    }
                }
                Tok::Eof => return false,
                _ => {}
            }
            k += 1;
        }
    }

    fn program(&mut self) -> Result<(Vec<Procedure>, Vec<Pending>), Error> {
        let mut procs: Vec<Procedure> = Vec::new();
        let mut top = Vec::new();
        while *self.peek() != Tok::Eof {
            if self.is_proc_def() {
                let line = self.pos().line;
                let pos = self.pos();
                let name = self.ident()?;
                self.expect("(")?;
                let mut params = Vec::new();
                if !self.eat(")") {
                    loop {
                        params.push(self.ident()?);
                        if self.eat(")") {
                            break;
                        }
                        self.expect(",")?;
                    }
                }
                let mut seen = BTreeSet::new();
                for p in &params {
                    if !seen.insert(p) {
                        return Err(Error::Syntax { pos, message: format!("duplicate parameter `{p}`") });
                    }
                }
                if procs.iter().any(|p| p.name == name) {
                    return Err(Error::Syntax { pos, message: format!("procedure `{name}` defined twice") });
                }
                self.expect("{")?;
                let body = self.block_rest()?;
                procs.push(Procedure { name, params, body, line });
            } else {
                top.push(self.stmt()?);
            }
        }
        Ok((procs, top))
    }

    /// Statements up to and including the closing brace.
    fn block_rest(&mut self) -> Result<Block, Error> {
        let mut out: Block = Vec::new();
        loop {
            if self.eat("}") {
                return Ok(out);
            }
            if *self.peek() == Tok::Eof {
                return self.error("unexpected end of input, expected `}`");
            }
            if !completes(&out) {
                return self.error("unreachable statement after break/continue");
            }
            out.push(self.stmt()?);
        }
    }

    fn block(&mut self) -> Result<Block, Error> {
        if self.eat("{") {
            self.block_rest()
        } else {
            Ok(alloc::vec![self.stmt()?])
        }
    }

    fn stmt(&mut self) -> Result<Pending, Error> {
        let mut label = PENDING + self.pending;
        if let Tok::At(n) = *self.peek() {
            let pos = self.pos();
            if n >= PENDING {
                return Err(Error::Syntax { pos, message: format!("label @{n} is too large") });
            }
            if !self.explicit.insert(n) {
                return Err(Error::DuplicateLabel { label: Label(n), pos });
            }
            label = n;
            self.bump();
        } else {
            self.pending += 1;
        }
        let pos = self.pos();
        let kind = match self.bump() {
            Tok::Kw("goto") => return Err(Error::GotoUnsupported { pos }),
            Tok::Kw("return") => {
                return Err(Error::Syntax { pos, message: "`return` is not part of the language".into() })
            }
            Tok::Kw("skip") => {
                self.expect(";")?;
                StmtKind::Skip
            }
            Tok::Kw(k @ ("break" | "continue")) => {
                if self.loop_depth == 0 {
                    return Err(Error::Syntax { pos, message: format!("`{k}` outside of a loop") });
                }
                self.expect(";")?;
                if k == "break" {
                    StmtKind::Break
                } else {
                    StmtKind::Continue
                }
            }
            Tok::Kw("if") => {
                self.expect("(")?;
                let cond = self.guard()?;
                self.expect(")")?;
                let then_branch = self.block()?;
                let else_branch = if *self.peek() == Tok::Kw("else") {
                    self.bump();
                    self.block()?
                } else {
                    Vec::new()
                };
                StmtKind::If { cond, then_branch, else_branch }
            }
            Tok::Kw("while") => {
                self.expect("(")?;
                let cond = self.guard()?;
                self.expect(")")?;
                self.loop_depth += 1;
                let body = self.block();
                self.loop_depth -= 1;
                StmtKind::While { cond, body: body? }
            }
            Tok::Ident(name) => {
                if self.eat("=") {
                    let value = if *self.peek() == Tok::Sym("*") && *self.peek_at(1) == Tok::Sym(";") {
                        self.bump();
                        Rhs::Any
                    } else {
                        Rhs::Expr(self.expr()?)
                    };
                    self.expect(";")?;
                    StmtKind::Assign { target: name, value }
                } else if self.eat("(") {
                    let mut args = Vec::new();
                    if !self.eat(")") {
                        loop {
                            args.push(self.expr()?);
                            if self.eat(")") {
                                break;
                            }
                            self.expect(",")?;
                        }
                    }
                    self.expect(";")?;
                    StmtKind::Call { callee: name, args }
                } else {
                    let found = Self::describe(self.peek());
                    return self.error(format!("expected `=` or `(` after `{name}`, found {found}"));
                }
            }
            t => {
                self.at -= 1;
                return self.error(format!("expected a statement, found {}", Self::describe(&t)));
            }
        };
        Ok(Stmt::new(Label(label), pos.line, kind))
    }

    fn guard(&mut self) -> Result<Guard, Error> {
        if *self.peek() == Tok::Sym("*") && *self.peek_at(1) == Tok::Sym(")") {
            self.bump();
            Ok(Guard::Abstract)
        } else {
            Ok(Guard::Expr(self.expr()?))
        }
    }

    fn expr(&mut self) -> Result<Expr, Error> {
        self.binary(1)
    }

    fn binop(&self) -> Option<BinOp> {
        Some(match self.peek() {
            Tok::Sym("||") => BinOp::Or,
            Tok::Sym("&&") => BinOp::And,
            Tok::Sym("==") => BinOp::Eq,
            Tok::Sym("!=") => BinOp::Ne,
            Tok::Sym("<") => BinOp::Lt,
            Tok::Sym("<=") => BinOp::Le,
            Tok::Sym(">") => BinOp::Gt,
            Tok::Sym(">=") => BinOp::Ge,
            Tok::Sym("+") => BinOp::Add,
            Tok::Sym("-") => BinOp::Sub,
            Tok::Sym("*") => BinOp::Mul,
            Tok::Sym("/") => BinOp::Div,
            _ => return None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> Result<Expr, Error> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop() {
            if op.precedence() < min_prec {
                break;
            }
            self.bump();
            let rhs = self.binary(op.precedence() + 1)?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, Error> {
        if self.eat("-") {
            // Fold negative literals so `-5` prints back as written.
            return Ok(match self.unary()? {
                Expr::Int(n) if n > 0 => Expr::Int(-n),
                e => Expr::Unary(UnOp::Neg, Box::new(e)),
            });
        }
        if self.eat("!") {
            return Ok(Expr::Unary(UnOp::Not, Box::new(self.unary()?)));
        }
        match self.bump() {
            Tok::Int(n) => Ok(Expr::Int(n)),
            Tok::Ident(v) => Ok(Expr::Var(v)),
            Tok::Sym("(") => {
                let e = self.expr()?;
                self.expect(")")?;
                Ok(e)
            }
            t => {
                self.at -= 1;
                self.error(format!("expected an expression, found {}", Self::describe(&t)))
            }
        }
    }
}

/// False when control cannot fall out of the end of `block`.
pub(super) fn completes(block: &[Stmt]) -> bool {
    match block.last().map(|s| &s.kind) {
        Some(StmtKind::Break | StmtKind::Continue) => false,
        Some(StmtKind::If { then_branch, else_branch, .. }) => completes(then_branch) || completes(else_branch),
        _ => true,
    }
}

fn assign_labels(block: &mut Block, base: u32) {
    for s in block.iter_mut() {
        if s.label.0 >= PENDING {
            s.label = Label(base + (s.label.0 - PENDING) + 1);
        }
        match &mut s.kind {
            StmtKind::If { then_branch, else_branch, .. } => {
                assign_labels(then_branch, base);
                assign_labels(else_branch, base);
            }
            StmtKind::While { body, .. } => assign_labels(body, base),
            _ => {}
        }
    }
}

/// Checks that every call names a defined procedure with matching arity and
/// that the call graph is acyclic.
pub(crate) fn check_calls(procs: &[Procedure]) -> Result<(), Error> {
    let index: BTreeMap<&str, usize> = procs.iter().enumerate().map(|(i, p)| (p.name.as_str(), i)).collect();
    let mut edges: Vec<Vec<usize>> = alloc::vec![Vec::new(); procs.len()];
    for (i, p) in procs.iter().enumerate() {
        let mut err = None;
        walk(&p.body, &mut |s| {
            if err.is_some() {
                return;
            }
            if let StmtKind::Call { callee, args } = &s.kind {
                let pos = Pos { line: s.line, col: 1 };
                match index.get(callee.as_str()) {
                    None => err = Some(Error::UnknownProcedure { name: callee.clone(), pos }),
                    Some(&j) => {
                        if procs[j].params.len() != args.len() {
                            err = Some(Error::Arity {
                                name: callee.clone(),
                                expected: procs[j].params.len(),
                                found: args.len(),
                                pos,
                            });
                        } else {
                            edges[i].push(j);
                        }
                    }
                }
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
    }
    // Iterative DFS with colors: 0 = unvisited, 1 = on stack, 2 = done.
    let mut color = alloc::vec![0u8; procs.len()];
    for root in 0..procs.len() {
        if color[root] != 0 {
            continue;
        }
        let mut stack: Vec<(usize, usize)> = alloc::vec![(root, 0)];
        color[root] = 1;
        while let Some(&mut (node, ref mut next)) = stack.last_mut() {
            if *next < edges[node].len() {
                let succ = edges[node][*next];
                *next += 1;
                match color[succ] {
                    0 => {
                        color[succ] = 1;
                        stack.push((succ, 0));
                    }
                    1 => {
                        let start = stack.iter().position(|(n, _)| *n == succ).unwrap_or(0);
                        let mut cycle: Vec<String> = stack[start..].iter().map(|(n, _)| procs[*n].name.clone()).collect();
                        cycle.push(procs[succ].name.clone());
                        return Err(Error::Recursion { cycle });
                    }
                    _ => {}
                }
            } else {
                color[node] = 2;
                stack.pop();
            }
        }
    }
    Ok(())
}

/// Parses a program, assigning labels to unlabeled statements.
pub fn parse_program(text: &str) -> Result<Program, Error> {
    let toks = lex(text)?;
    let mut parser = Parser { toks, at: 0, explicit: BTreeSet::new(), pending: 0, loop_depth: 0 };
    let (mut procs, top) = parser.program()?;
    let implicit_entry = !top.is_empty();
    let entry = if implicit_entry {
        if procs.iter().any(|p| p.name == IMPLICIT_ENTRY) {
            return Err(Error::Syntax {
                pos: Pos { line: 1, col: 1 },
                message: format!("top-level statements conflict with procedure `{IMPLICIT_ENTRY}`"),
            });
        }
        procs.insert(0, Procedure { name: IMPLICIT_ENTRY.into(), params: Vec::new(), body: top, line: 0 });
        String::from(IMPLICIT_ENTRY)
    } else if procs.iter().any(|p| p.name == IMPLICIT_ENTRY) {
        String::from(IMPLICIT_ENTRY)
    } else if let Some(first) = procs.first() {
        first.name.clone()
    } else {
        // An empty file is the empty entry procedure.
        procs.push(Procedure { name: IMPLICIT_ENTRY.into(), params: Vec::new(), body: Vec::new(), line: 0 });
        String::from(IMPLICIT_ENTRY)
    };
    let base = parser.explicit.iter().next_back().copied().unwrap_or(0);
    for p in &mut procs {
        assign_labels(&mut p.body, base);
    }
    check_calls(&procs)?;
    Ok(Program { procedures: procs, entry, implicit_entry, origins: BTreeMap::new() })
}
