//! Interpreter for (possibly abstract) programs.
//!
//! Integers are `i64` with wrapping arithmetic; division by zero faults.
//! Comparisons and connectives yield 0/1, nonzero is true, `&&`/`||`
//! short-circuit. Unset variables read as their input value or 0.
//!
//! A trace records the state on arrival at every node: `ENTRY` first, then
//! each statement before it executes, then `EXIT`. Abstract statements ask
//! a [`Chooser`]; [`enumerate`] drives a chooser through every resolution
//! by replaying decision prefixes depth-first.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::ops::ControlFlow;

use crate::cfg::Node;
use crate::lang::{BinOp, Expr, Guard, Label, Program, Rhs, SlicingCriterion, Stmt, StmtKind, UnOp};

/// Initial variable values.
pub type Input = BTreeMap<String, i64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    DivisionByZero(Label),
}

impl fmt::Display for Fault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Fault::DivisionByZero(l) => write!(f, "division by zero at @{l}"),
        }
    }
}

impl core::error::Error for Fault {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Terminated,
    /// Step budget exhausted.
    OutOfSteps,
    Fault(Fault),
    /// The observer asked to stop.
    Stopped,
}

/// Resolves abstract statements.
pub trait Chooser {
    fn choose_cond(&mut self, at: Label) -> bool;
    fn choose_value(&mut self, at: Label) -> i64;
}

/// Sees every execution state. Returning `Break` stops the run.
pub trait Observer {
    fn state(&mut self, node: Node, values: &[i64]) -> ControlFlow<()>;
}

/// Picks `false` and 0 everywhere.
pub struct FirstChoice;

impl Chooser for FirstChoice {
    fn choose_cond(&mut self, _: Label) -> bool {
        false
    }
    fn choose_value(&mut self, _: Label) -> i64 {
        0
    }
}

#[derive(Debug, Clone)]
enum CExpr {
    Int(i64),
    Var(usize),
    Unary(UnOp, Box<CExpr>),
    Binary(BinOp, Box<CExpr>, Box<CExpr>),
}

#[derive(Debug, Clone)]
enum CStmt {
    Assign(Label, usize, Option<CExpr>),
    If(Label, Option<CExpr>, Vec<CStmt>, Vec<CStmt>),
    While(Label, Option<CExpr>, Vec<CStmt>),
    Break(Label),
    Continue(Label),
    Skip(Label),
    Call(Label, usize, Vec<CExpr>),
}

#[derive(Debug, Clone)]
struct CProc {
    params: Vec<usize>,
    body: Vec<CStmt>,
}

/// A compiled program. Variables live in numbered slots; callee parameters
/// get slots of their own, which is sound because calls never recurse.
#[derive(Debug, Clone)]
pub struct Machine {
    vars: Vec<String>,
    index: BTreeMap<String, usize>,
    procs: Vec<CProc>,
    entry: usize,
}

enum Flow {
    Normal,
    Break,
    Continue,
}

enum Halt {
    OutOfSteps,
    Fault(Fault),
    Stopped,
}

struct Exec<'a> {
    m: &'a Machine,
    values: Vec<i64>,
    steps: usize,
    budget: usize,
    chooser: &'a mut dyn Chooser,
    observer: &'a mut dyn Observer,
}

impl Machine {
    pub fn new(p: &Program) -> Machine {
        Machine::with_vars(p, core::iter::empty::<&str>())
    }

    /// Also allocates slots for `extra` variables, so observers can read
    /// them even when the program never mentions them.
    pub fn with_vars<I, S>(p: &Program, extra: I) -> Machine
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut m = Machine { vars: Vec::new(), index: BTreeMap::new(), procs: Vec::new(), entry: 0 };
        let mut names: BTreeSet<String> = p.globals();
        names.extend(extra.into_iter().map(|s| String::from(s.as_ref())));
        for n in names {
            m.slot(&n);
        }
        let proc_index: BTreeMap<&str, usize> =
            p.procedures.iter().enumerate().map(|(i, q)| (q.name.as_str(), i)).collect();
        for q in &p.procedures {
            let is_entry = q.name == p.entry;
            // Entry parameters are ordinary inputs; callee parameters are
            // private to the callee.
            let mut rename = BTreeMap::new();
            let mut params = Vec::new();
            for param in &q.params {
                let slot = if is_entry { m.slot(param) } else { m.fresh(&alloc::format!("{}::{param}", q.name)) };
                rename.insert(param.clone(), slot);
                params.push(slot);
            }
            let body = m.block(&q.body, &rename, &proc_index);
            m.procs.push(CProc { params, body });
        }
        m.entry = proc_index[p.entry.as_str()];
        m
    }

    fn slot(&mut self, name: &str) -> usize {
        if let Some(&i) = self.index.get(name) {
            return i;
        }
        self.fresh(name)
    }

    fn fresh(&mut self, name: &str) -> usize {
        let i = self.vars.len();
        self.vars.push(String::from(name));
        self.index.insert(String::from(name), i);
        i
    }

    fn expr(&mut self, e: &Expr, rename: &BTreeMap<String, usize>) -> CExpr {
        match e {
            Expr::Int(n) => CExpr::Int(*n),
            Expr::Var(v) => CExpr::Var(match rename.get(v) {
                Some(&s) => s,
                None => self.slot(v),
            }),
            Expr::Unary(op, a) => CExpr::Unary(*op, Box::new(self.expr(a, rename))),
            Expr::Binary(op, a, b) => {
                CExpr::Binary(*op, Box::new(self.expr(a, rename)), Box::new(self.expr(b, rename)))
            }
        }
    }

    fn guard(&mut self, g: &Guard, rename: &BTreeMap<String, usize>) -> Option<CExpr> {
        match g {
            Guard::Expr(e) => Some(self.expr(e, rename)),
            Guard::Abstract => None,
        }
    }

    fn block(&mut self, b: &[Stmt], rename: &BTreeMap<String, usize>, procs: &BTreeMap<&str, usize>) -> Vec<CStmt> {
        b.iter()
            .map(|s| {
                let l = s.label;
                match &s.kind {
                    StmtKind::Assign { target, value } => {
                        let slot = match rename.get(target) {
                            Some(&x) => x,
                            None => self.slot(target),
                        };
                        let rhs = match value {
                            Rhs::Expr(e) => Some(self.expr(e, rename)),
                            Rhs::Any => None,
                        };
                        CStmt::Assign(l, slot, rhs)
                    }
                    StmtKind::If { cond, then_branch, else_branch } => CStmt::If(
                        l,
                        self.guard(cond, rename),
                        self.block(then_branch, rename, procs),
                        self.block(else_branch, rename, procs),
                    ),
                    StmtKind::While { cond, body } => {
                        CStmt::While(l, self.guard(cond, rename), self.block(body, rename, procs))
                    }
                    StmtKind::Break => CStmt::Break(l),
                    StmtKind::Continue => CStmt::Continue(l),
                    StmtKind::Skip => CStmt::Skip(l),
                    StmtKind::Call { callee, args } => {
                        let args = args.iter().map(|a| self.expr(a, rename)).collect();
                        CStmt::Call(l, procs[callee.as_str()], args)
                    }
                }
            })
            .collect()
    }

    /// Variable names by slot.
    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn slot_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn initial_values(&self, input: &Input) -> Vec<i64> {
        self.vars.iter().map(|v| input.get(v).copied().unwrap_or(0)).collect()
    }

    /// Runs the entry procedure on `input` for at most `budget` statement
    /// executions.
    pub fn execute(
        &self,
        input: &Input,
        budget: usize,
        chooser: &mut dyn Chooser,
        observer: &mut dyn Observer,
    ) -> Outcome {
        let mut ex = Exec { m: self, values: self.initial_values(input), steps: 0, budget, chooser, observer };
        let result = (|| {
            ex.observe(Node::Entry)?;
            ex.block(&self.procs[self.entry].body)?;
            ex.observe(Node::Exit)
        })();
        match result {
            Ok(_) => Outcome::Terminated,
            Err(Halt::OutOfSteps) => Outcome::OutOfSteps,
            Err(Halt::Fault(f)) => Outcome::Fault(f),
            Err(Halt::Stopped) => Outcome::Stopped,
        }
    }
}

fn truth(v: i64) -> bool {
    v != 0
}

impl Exec<'_> {
    fn observe(&mut self, node: Node) -> Result<(), Halt> {
        match self.observer.state(node, &self.values) {
            ControlFlow::Continue(()) => Ok(()),
            ControlFlow::Break(()) => Err(Halt::Stopped),
        }
    }

    fn arrive(&mut self, l: Label) -> Result<(), Halt> {
        if self.steps >= self.budget {
            return Err(Halt::OutOfSteps);
        }
        self.steps += 1;
        self.observe(Node::Stmt(l))
    }

    fn eval(&self, e: &CExpr, at: Label) -> Result<i64, Halt> {
        Ok(match e {
            CExpr::Int(n) => *n,
            CExpr::Var(s) => self.values[*s],
            CExpr::Unary(UnOp::Neg, a) => self.eval(a, at)?.wrapping_neg(),
            CExpr::Unary(UnOp::Not, a) => i64::from(!truth(self.eval(a, at)?)),
            CExpr::Binary(BinOp::And, a, b) => i64::from(truth(self.eval(a, at)?) && truth(self.eval(b, at)?)),
            CExpr::Binary(BinOp::Or, a, b) => i64::from(truth(self.eval(a, at)?) || truth(self.eval(b, at)?)),
            CExpr::Binary(op, a, b) => {
                let (x, y) = (self.eval(a, at)?, self.eval(b, at)?);
                match op {
                    BinOp::Add => x.wrapping_add(y),
                    BinOp::Sub => x.wrapping_sub(y),
                    BinOp::Mul => x.wrapping_mul(y),
                    BinOp::Div => {
                        if y == 0 {
                            return Err(Halt::Fault(Fault::DivisionByZero(at)));
                        }
                        x.wrapping_div(y)
                    }
                    BinOp::Eq => i64::from(x == y),
                    BinOp::Ne => i64::from(x != y),
                    BinOp::Lt => i64::from(x < y),
                    BinOp::Le => i64::from(x <= y),
                    BinOp::Gt => i64::from(x > y),
                    BinOp::Ge => i64::from(x >= y),
                    BinOp::And | BinOp::Or => unreachable!(),
                }
            }
        })
    }

    fn test(&mut self, at: Label, cond: &Option<CExpr>) -> Result<bool, Halt> {
        match cond {
            Some(e) => Ok(truth(self.eval(e, at)?)),
            None => Ok(self.chooser.choose_cond(at)),
        }
    }

    fn block(&mut self, b: &[CStmt]) -> Result<Flow, Halt> {
        for s in b {
            match self.stmt(s)? {
                Flow::Normal => {}
                jump => return Ok(jump),
            }
        }
        Ok(Flow::Normal)
    }

    fn stmt(&mut self, s: &CStmt) -> Result<Flow, Halt> {
        match s {
            CStmt::Assign(l, slot, rhs) => {
                self.arrive(*l)?;
                self.values[*slot] = match rhs {
                    Some(e) => self.eval(e, *l)?,
                    None => self.chooser.choose_value(*l),
                };
            }
            CStmt::If(l, cond, then_b, else_b) => {
                self.arrive(*l)?;
                let taken = if self.test(*l, cond)? { then_b } else { else_b };
                return self.block(taken);
            }
            CStmt::While(l, cond, body) => loop {
                self.arrive(*l)?;
                if !self.test(*l, cond)? {
                    break;
                }
                if let Flow::Break = self.block(body)? {
                    break;
                }
            },
            CStmt::Break(l) => {
                self.arrive(*l)?;
                return Ok(Flow::Break);
            }
            CStmt::Continue(l) => {
                self.arrive(*l)?;
                return Ok(Flow::Continue);
            }
            CStmt::Skip(l) => self.arrive(*l)?,
            CStmt::Call(l, callee, args) => {
                self.arrive(*l)?;
                let proc = &self.m.procs[*callee];
                let vals = args.iter().map(|a| self.eval(a, *l)).collect::<Result<Vec<_>, _>>()?;
                for (&slot, v) in proc.params.iter().zip(vals) {
                    self.values[slot] = v;
                }
                self.block(&proc.body)?;
            }
        }
        Ok(Flow::Normal)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionState {
    pub node: Node,
    pub values: Vec<i64>,
}

/// One nondeterministic decision: the option taken and how many there were.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Decision {
    pub at: Label,
    pub chosen: usize,
    pub options: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    /// Variable names, indexing `ExecutionState::values`.
    pub vars: Vec<String>,
    pub states: Vec<ExecutionState>,
    pub terminated: bool,
    pub fault: Option<Fault>,
    pub choices: Vec<Decision>,
}

impl Trace {
    pub fn value(&self, state: usize, var: &str) -> Option<i64> {
        let i = self.vars.iter().position(|v| v == var)?;
        Some(self.states[state].values[i])
    }
}

struct Recorder(Vec<ExecutionState>);

impl Observer for Recorder {
    fn state(&mut self, node: Node, values: &[i64]) -> ControlFlow<()> {
        self.0.push(ExecutionState { node, values: values.to_vec() });
        ControlFlow::Continue(())
    }
}

/// Deterministic run of a concrete program. Abstract statements, if any,
/// take their first option. `terminated` is false when `budget` statement
/// executions did not suffice.
pub fn run(p: &Program, input: &Input, budget: usize) -> Result<Trace, Fault> {
    let m = Machine::new(p);
    let mut rec = Recorder(Vec::new());
    let outcome = m.execute(input, budget, &mut FirstChoice, &mut rec);
    if let Outcome::Fault(f) = outcome {
        return Err(f);
    }
    Ok(Trace {
        vars: m.vars.clone(),
        states: rec.0,
        terminated: outcome == Outcome::Terminated,
        fault: None,
        choices: Vec::new(),
    })
}

/// Values tried for abstract assignments.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProbeSet {
    pub common: BTreeSet<i64>,
    pub per_label: BTreeMap<Label, BTreeSet<i64>>,
}

impl ProbeSet {
    /// {-1, 0, 1} plus every literal of `p` and its neighbours.
    pub fn default_for(p: &Program) -> ProbeSet {
        let mut common: BTreeSet<i64> = [-1, 0, 1].into();
        for n in p.literals() {
            common.extend([n.wrapping_sub(1), n, n.wrapping_add(1)]);
        }
        ProbeSet { common, per_label: BTreeMap::new() }
    }

    pub fn values(&self, at: Label) -> Vec<i64> {
        let mut all = self.common.clone();
        if let Some(extra) = self.per_label.get(&at) {
            all.extend(extra);
        }
        all.into_iter().collect()
    }
}

/// Replays a decision prefix, then takes option 0. Decisions past
/// `branch_budget` are forced to option 0 and not logged.
struct Replay<'a> {
    prefix: &'a [usize],
    log: Vec<Decision>,
    probes: &'a BTreeMap<Label, Vec<i64>>,
    common: &'a [i64],
    branch_budget: usize,
    forced: bool,
}

impl Replay<'_> {
    fn decide(&mut self, at: Label, options: usize) -> usize {
        let k = self.log.len();
        if k >= self.branch_budget {
            self.forced = true;
            return 0;
        }
        let chosen = self.prefix.get(k).copied().unwrap_or(0);
        self.log.push(Decision { at, chosen, options });
        chosen
    }
}

impl Chooser for Replay<'_> {
    fn choose_cond(&mut self, at: Label) -> bool {
        self.decide(at, 2) == 1
    }

    fn choose_value(&mut self, at: Label) -> i64 {
        let values = self.probes.get(&at).map(Vec::as_slice).unwrap_or(self.common);
        let i = self.decide(at, values.len().max(1));
        values.get(i).copied().unwrap_or(0)
    }
}

/// One resolution of the nondeterministic choices.
pub struct Resolution<'a, O> {
    pub outcome: Outcome,
    pub observer: O,
    pub choices: &'a [Decision],
    /// Some decision past the branch budget was forced to option 0.
    pub forced: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EnumerationStats {
    pub runs: usize,
    /// At least one run had decisions forced by the branch budget.
    pub incomplete: bool,
    /// `visit` stopped the enumeration early.
    pub stopped: bool,
}

/// Runs `m` once per resolution of its abstract statements, depth-first.
/// `make` builds a fresh observer for each run; `visit` sees the result and
/// may stop the enumeration.
pub fn enumerate<O: Observer>(
    m: &Machine,
    input: &Input,
    budget: usize,
    branch_budget: usize,
    probes: &ProbeSet,
    mut make: impl FnMut() -> O,
    mut visit: impl FnMut(Resolution<'_, O>) -> ControlFlow<()>,
) -> EnumerationStats {
    let common: Vec<i64> = probes.common.iter().copied().collect();
    let per_label: BTreeMap<Label, Vec<i64>> = probes.per_label.keys().map(|&l| (l, probes.values(l))).collect();
    let mut stats = EnumerationStats::default();
    let mut prefix: Vec<usize> = Vec::new();
    loop {
        let mut chooser =
            Replay { prefix: &prefix, log: Vec::new(), probes: &per_label, common: &common, branch_budget, forced: false };
        let mut obs = make();
        let outcome = m.execute(input, budget, &mut chooser, &mut obs);
        stats.runs += 1;
        stats.incomplete |= chooser.forced;
        let log = chooser.log;
        let flow = visit(Resolution { outcome, observer: obs, choices: &log, forced: chooser.forced });
        if flow.is_break() {
            stats.stopped = true;
            return stats;
        }
        match log.iter().rposition(|d| d.chosen + 1 < d.options) {
            Some(k) => {
                prefix = log[..k].iter().map(|d| d.chosen).collect();
                prefix.push(log[k].chosen + 1);
            }
            None => return stats,
        }
    }
}

/// Every resolution of `p` on `input` as a full trace.
pub fn run_all(p: &Program, input: &Input, budget: usize, branch_budget: usize, probes: &ProbeSet) -> (Vec<Trace>, EnumerationStats) {
    let m = Machine::new(p);
    let mut out = Vec::new();
    let stats = enumerate(&m, input, budget, branch_budget, probes, || Recorder(Vec::new()), |r| {
        out.push(Trace {
            vars: m.vars.clone(),
            states: r.observer.0,
            terminated: r.outcome == Outcome::Terminated,
            fault: match r.outcome {
                Outcome::Fault(f) => Some(f),
                _ => None,
            },
            choices: r.choices.to_vec(),
        });
        ControlFlow::Continue(())
    });
    (out, stats)
}

/// V-restricted states at each visit to the criterion location, in order.
/// Each snapshot lists the values of the criterion variables in name order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TraceWindow {
    pub vars: Vec<String>,
    pub snapshots: Vec<Vec<i64>>,
}

impl TraceWindow {
    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn snapshot(&self, i: usize) -> BTreeMap<String, i64> {
        self.vars.iter().cloned().zip(self.snapshots[i].iter().copied()).collect()
    }
}

pub fn trace_window(t: &Trace, c: &SlicingCriterion) -> TraceWindow {
    let vars: Vec<String> = c.vars.iter().cloned().collect();
    let idx: Vec<Option<usize>> = vars.iter().map(|v| t.vars.iter().position(|x| x == v)).collect();
    let snapshots = t
        .states
        .iter()
        .filter(|s| s.node == Node::Stmt(c.location))
        .map(|s| idx.iter().map(|i| i.map_or(0, |i| s.values[i])).collect())
        .collect();
    TraceWindow { vars, snapshots }
}

/// Records the window of a criterion while running; stops the run once
/// more than `limit` snapshots were taken.
#[derive(Debug, Clone)]
pub struct WindowObserver {
    location: Label,
    slots: Vec<usize>,
    limit: Option<usize>,
    pub snapshots: Vec<Vec<i64>>,
    /// Values each statement assigned, keyed by label.
    pub assigned: Option<BTreeMap<Label, BTreeSet<i64>>>,
    pending: Option<(Label, usize)>,
    assign_slots: BTreeMap<Label, usize>,
}

impl WindowObserver {
    /// `m` must have slots for every criterion variable (see
    /// [`Machine::with_vars`]).
    pub fn new(m: &Machine, c: &SlicingCriterion, limit: Option<usize>) -> WindowObserver {
        let slots = c.vars.iter().map(|v| m.slot_of(v).expect("criterion variable has a slot")).collect();
        WindowObserver {
            location: c.location,
            slots,
            limit,
            snapshots: Vec::new(),
            assigned: None,
            pending: None,
            assign_slots: BTreeMap::new(),
        }
    }

    /// Also collect the values assigned by each assignment of `p`.
    pub fn recording_assignments(mut self, m: &Machine, p: &Program) -> WindowObserver {
        for s in p.statements() {
            if let Some(t) = s.def() {
                if let Some(slot) = m.slot_of(t) {
                    self.assign_slots.insert(s.label, slot);
                }
            }
        }
        self.assigned = Some(BTreeMap::new());
        self
    }

    pub fn into_window(self, c: &SlicingCriterion) -> TraceWindow {
        TraceWindow { vars: c.vars.iter().cloned().collect(), snapshots: self.snapshots }
    }
}

impl Observer for WindowObserver {
    fn state(&mut self, node: Node, values: &[i64]) -> ControlFlow<()> {
        if let (Some((l, slot)), Some(rec)) = (self.pending.take(), self.assigned.as_mut()) {
            rec.entry(l).or_default().insert(values[slot]);
        }
        if let Node::Stmt(l) = node {
            if self.assigned.is_some() {
                self.pending = self.assign_slots.get(&l).map(|&s| (l, s));
            }
            if l == self.location {
                self.snapshots.push(self.slots.iter().map(|&s| values[s]).collect());
                if self.limit.is_some_and(|k| self.snapshots.len() > k) {
                    return ControlFlow::Break(());
                }
            }
        }
        ControlFlow::Continue(())
    }
}
