//! Program transformations: augmentation with a criterion `SKIP`, inlining
//! of procedure calls, and carving out (abstract) subprograms.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::ast::*;
use super::error::Error;
use super::parse::{check_calls, completes};

/// Slicing criterion `<l, V>`: the values of `vars` just before the
/// statement labeled `location` executes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SlicingCriterion {
    pub location: Label,
    pub vars: BTreeSet<String>,
}

impl SlicingCriterion {
    pub fn new<I, S>(location: Label, vars: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        SlicingCriterion { location, vars: vars.into_iter().map(Into::into).collect() }
    }
}

/// A statement boundary in the entry procedure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    /// Before the first statement starting on this 1-based line.
    Line(u32),
    /// Before the statement with this label.
    Before(Label),
    /// Right after the statement with this label, in the same block.
    After(Label),
    /// After the last statement of the entry procedure.
    End,
}

/// Inserts `skip` at offset `after` (0 or 1) from the first statement
/// satisfying `found`, searching nested blocks in order.
fn insert_at(block: &mut Block, found: &impl Fn(&Stmt) -> bool, after: usize, skip: &mut Option<Stmt>) -> bool {
    for i in 0..block.len() {
        if found(&block[i]) {
            let s = skip.take().expect("inserted once");
            block.insert(i + after, s);
            return true;
        }
        let hit = match &mut block[i].kind {
            StmtKind::If { then_branch, else_branch, .. } => {
                insert_at(then_branch, found, after, skip) || insert_at(else_branch, found, after, skip)
            }
            StmtKind::While { body, .. } => insert_at(body, found, after, skip),
            _ => false,
        };
        if hit {
            return true;
        }
    }
    false
}

/// Inserts a `SKIP` at `at` and returns the augmented program together with
/// the criterion located at that `SKIP`.
pub fn augment<I, S>(p: &Program, at: Location, vars: I) -> Result<(Program, SlicingCriterion), Error>
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let vars: BTreeSet<String> = vars.into_iter().map(Into::into).collect();
    let known = p.globals();
    if let Some(v) = vars.iter().find(|v| !known.contains(*v)) {
        return Err(Error::UnknownVariable(v.clone()));
    }
    let label = Label(p.max_label() + 1);
    let mut out = p.clone();
    let mut skip = Some(Stmt::new(label, 0, StmtKind::Skip));
    let entry = out.entry_procedure_mut();
    let inserted = match at {
        Location::End => {
            entry.body.push(skip.take().expect("unused"));
            true
        }
        Location::Line(line) => insert_at(&mut entry.body, &|s: &Stmt| s.line == line, 0, &mut skip),
        Location::Before(l) => insert_at(&mut entry.body, &|s: &Stmt| s.label == l, 0, &mut skip),
        Location::After(l) => {
            if entry_jumps_at(&entry.body, l) {
                return Err(Error::BadLocation(format!("control never falls out of @{l}")));
            }
            insert_at(&mut entry.body, &|s: &Stmt| s.label == l, 1, &mut skip)
        }
    };
    if !inserted {
        let what = match at {
            Location::Line(n) => format!("no statement of the entry procedure starts on line {n}"),
            Location::Before(l) | Location::After(l) => format!("no statement @{l} in the entry procedure"),
            Location::End => unreachable!(),
        };
        return Err(Error::BadLocation(what));
    }
    Ok((out, SlicingCriterion { location: label, vars }))
}

/// Whether control can never fall out of the statement labeled `l`.
fn entry_jumps_at(block: &[Stmt], l: Label) -> bool {
    let mut hit = false;
    walk(block, &mut |s| hit |= s.label == l && !completes(core::slice::from_ref(s)));
    hit
}

struct Inliner<'p> {
    program: &'p Program,
    next: u32,
    taken: BTreeSet<String>,
    origins: BTreeMap<Label, Origin>,
}

impl Inliner<'_> {
    fn fresh(&mut self) -> Label {
        self.next += 1;
        Label(self.next)
    }

    fn local_name(&mut self, param: &str, callee: &str, site: Label) -> String {
        let mut name = format!("{param}_{callee}{site}");
        while self.taken.contains(&name) {
            name.push('_');
        }
        self.taken.insert(name.clone());
        name
    }

    /// Expands `block`, which belongs to a copy made at `site` (None for the
    /// entry procedure itself), renaming variables through `rename`.
    fn expand(&mut self, block: &[Stmt], rename: &BTreeMap<String, String>, site: Option<Label>) -> Block {
        let mut out = Vec::new();
        for s in block {
            let label = match site {
                None => s.label,
                Some(call_site) => {
                    let l = self.fresh();
                    self.origins.insert(l, Origin { call_site, callee: Some(s.label) });
                    l
                }
            };
            let kind = match &s.kind {
                StmtKind::Call { callee, args } => {
                    let proc = self.program.procedure(callee).expect("calls were checked");
                    let mut inner = BTreeMap::new();
                    for (param, arg) in proc.params.iter().zip(args) {
                        let local = self.local_name(param, callee, label);
                        let l = self.fresh();
                        self.origins.insert(l, Origin { call_site: label, callee: None });
                        out.push(Stmt::new(
                            l,
                            s.line,
                            StmtKind::Assign { target: local.clone(), value: Rhs::Expr(arg.rename(rename)) },
                        ));
                        inner.insert(param.clone(), local);
                    }
                    out.extend(self.expand(&proc.body, &inner, Some(label)));
                    continue;
                }
                StmtKind::Assign { target, value } => StmtKind::Assign {
                    target: rename.get(target).cloned().unwrap_or_else(|| target.clone()),
                    value: match value {
                        Rhs::Expr(e) => Rhs::Expr(e.rename(rename)),
                        Rhs::Any => Rhs::Any,
                    },
                },
                StmtKind::If { cond, then_branch, else_branch } => StmtKind::If {
                    cond: rename_guard(cond, rename),
                    then_branch: self.expand(then_branch, rename, site),
                    else_branch: self.expand(else_branch, rename, site),
                },
                StmtKind::While { cond, body } => StmtKind::While {
                    cond: rename_guard(cond, rename),
                    body: self.expand(body, rename, site),
                },
                k @ (StmtKind::Break | StmtKind::Continue | StmtKind::Skip) => k.clone(),
            };
            out.push(Stmt::new(label, s.line, kind));
        }
        out
    }
}

fn rename_guard(g: &Guard, rename: &BTreeMap<String, String>) -> Guard {
    match g {
        Guard::Expr(e) => Guard::Expr(e.rename(rename)),
        Guard::Abstract => Guard::Abstract,
    }
}

/// Replaces every call reachable from the entry procedure by parameter
/// bindings followed by a relabeled copy of the callee body. The result has
/// a single procedure; `Program::origins` maps each new label back to its
/// call site and callee statement.
pub fn inline_calls(p: &Program) -> Result<Program, Error> {
    check_calls(&p.procedures)?;
    let mut taken = p.globals();
    for proc in &p.procedures {
        taken.extend(proc.params.iter().cloned());
    }
    let mut inliner = Inliner { program: p, next: p.max_label(), taken, origins: p.origins.clone() };
    let entry = p.entry_procedure();
    let body = inliner.expand(&entry.body, &BTreeMap::new(), None);
    Ok(Program {
        procedures: alloc::vec![Procedure { body, ..entry.clone() }],
        entry: p.entry.clone(),
        implicit_entry: p.implicit_entry,
        origins: inliner.origins,
    })
}

/// How a statement appears in an abstract subprogram.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Abstraction {
    /// The condition becomes `*`.
    Cond,
    /// The assignment becomes `x = *`.
    Assign,
}

fn restrict(
    block: &[Stmt],
    retained: &BTreeSet<Label>,
    abstractions: &BTreeMap<Label, Abstraction>,
    seen: &mut BTreeSet<Label>,
) -> Result<Block, Error> {
    let mut out = Vec::new();
    for s in block {
        let mode = abstractions.get(&s.label).copied();
        let keep = mode.is_some() || retained.contains(&s.label);
        let mut children: Vec<Block> = Vec::new();
        for child in s.children() {
            children.push(restrict(child, retained, abstractions, seen)?);
        }
        if !keep {
            if let Some(inner) = children.iter().flatten().next() {
                return Err(Error::StructureViolation { label: inner.label, enclosing: s.label });
            }
            continue;
        }
        seen.insert(s.label);
        let mut children = children.into_iter();
        let kind = match (&s.kind, mode) {
            (StmtKind::Assign { target, .. }, Some(Abstraction::Assign)) => {
                StmtKind::Assign { target: target.clone(), value: Rhs::Any }
            }
            (StmtKind::If { cond, .. }, m) if m != Some(Abstraction::Assign) => StmtKind::If {
                cond: if m.is_some() { Guard::Abstract } else { cond.clone() },
                then_branch: children.next().unwrap_or_default(),
                else_branch: children.next().unwrap_or_default(),
            },
            (StmtKind::While { cond, .. }, m) if m != Some(Abstraction::Assign) => StmtKind::While {
                cond: if m.is_some() { Guard::Abstract } else { cond.clone() },
                body: children.next().unwrap_or_default(),
            },
            (k, None) => k.clone(),
            (_, Some(m)) => {
                return Err(Error::BadLocation(format!("@{} cannot be abstracted as {m:?}", s.label)))
            }
        };
        out.push(Stmt::new(s.label, s.line, kind));
    }
    Ok(out)
}

/// Builds the (abstract) subprogram of `p` made of `retained` statements and
/// the abstracted ones. Every kept statement's enclosing statements must be
/// kept too.
pub fn subprogram(
    p: &Program,
    retained: &BTreeSet<Label>,
    abstractions: &BTreeMap<Label, Abstraction>,
) -> Result<Program, Error> {
    let mut seen = BTreeSet::new();
    let mut procedures = Vec::new();
    for proc in &p.procedures {
        let body = restrict(&proc.body, retained, abstractions, &mut seen)?;
        procedures.push(Procedure { body, ..proc.clone() });
    }
    if let Some(l) = retained.iter().chain(abstractions.keys()).find(|l| !seen.contains(*l)) {
        return Err(Error::BadLocation(format!("no statement @{l}")));
    }
    let origins = p.origins.iter().filter(|(l, _)| seen.contains(*l)).map(|(l, o)| (*l, *o)).collect();
    Ok(Program { procedures, entry: p.entry.clone(), implicit_entry: p.implicit_entry, origins })
}
