//! Slicing criteria for corpus runs.
//!
//! A procedure computes a result when it assigns a variable other than its
//! parameters. Each call of such a procedure from the entry procedure gives
//! an observation point right after the call, observing what the callee
//! (and its callees) assigns. Calls inside loops are skipped, so every
//! observation point is visited at most once per run. Programs without
//! such calls observe the entry procedure's own assignments at its end.

use std::collections::BTreeSet;

use dslice_core::lang::{walk, Block, Location, Program, Stmt, StmtKind};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Criterion {
    pub at: Location,
    pub vars: BTreeSet<String>,
}

/// Variables `name` assigns, directly or through calls, minus its
/// parameters.
pub fn results(p: &Program, name: &str) -> BTreeSet<String> {
    let Some(proc) = p.procedure(name) else { return BTreeSet::new() };
    let mut out = BTreeSet::new();
    walk(&proc.body, &mut |s| match &s.kind {
        StmtKind::Assign { target, .. } => {
            out.insert(target.clone());
        }
        StmtKind::Call { callee, .. } => out.extend(results(p, callee)),
        _ => {}
    });
    for param in &proc.params {
        out.remove(param);
    }
    out
}

fn call_sites(p: &Program, block: &Block, in_loop: bool, out: &mut Vec<Criterion>) {
    for s in block {
        match &s.kind {
            StmtKind::Call { callee, .. } if !in_loop => {
                let vars = results(p, callee);
                if !vars.is_empty() {
                    out.push(Criterion { at: Location::After(s.label), vars });
                }
            }
            StmtKind::If { then_branch, else_branch, .. } => {
                call_sites(p, then_branch, in_loop, out);
                call_sites(p, else_branch, in_loop, out);
            }
            StmtKind::While { body, .. } => call_sites(p, body, true, out),
            _ => {}
        }
    }
}

/// Every candidate criterion of `p`, in program order.
pub fn candidates(p: &Program) -> Vec<Criterion> {
    let mut out = Vec::new();
    call_sites(p, &p.entry_procedure().body, false, &mut out);
    if out.is_empty() {
        let vars = results(p, &p.entry);
        if !vars.is_empty() {
            out.push(Criterion { at: Location::End, vars });
        }
    }
    out
}

/// Seed for the program called `id`, so that adding programs to a corpus
/// leaves the choices for the others unchanged.
pub fn program_seed(seed: u64, id: &str) -> u64 {
    id.bytes().fold(seed ^ 0x9e37_79b9_7f4a_7c15, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}

/// At most `cap` candidates, drawn with a seeded generator, in program order.
pub fn select(p: &Program, id: &str, seed: u64, cap: usize) -> Vec<Criterion> {
    let all = candidates(p);
    if all.len() <= cap {
        return all;
    }
    let mut idx: Vec<usize> = (0..all.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(program_seed(seed, id)));
    idx.truncate(cap);
    idx.sort_unstable();
    idx.into_iter().map(|i| all[i].clone()).collect()
}

/// Statements of the entry procedure, in pre-order.
pub fn entry_statements(p: &Program) -> Vec<&Stmt> {
    let mut out = Vec::new();
    walk(&p.entry_procedure().body, &mut |s| out.push(s));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use dslice_core::lang::{parse_program, Label};

    const SRC: &str = "g(q) { r = q * 2; }\nf(p) { t = p + 1; g(t); }\nmain() {\n  f(a);\n  if (a > 0) { g(b); }\n  while (a < 3) { a = a + 1; f(a); }\n}";

    #[test]
    fn results_follow_calls_and_drop_parameters() {
        let p = parse_program(SRC).unwrap();
        assert_eq!(results(&p, "f"), ["r", "t"].map(String::from).into());
        assert_eq!(results(&p, "g"), ["r"].map(String::from).into());
    }

    #[test]
    fn call_sites_outside_loops() {
        let p = parse_program(SRC).unwrap();
        let got: Vec<Location> = candidates(&p).into_iter().map(|c| c.at).collect();
        let f_call = entry_statements(&p)[0].label;
        let g_call = entry_statements(&p)[2].label;
        assert_eq!(got, [Location::After(f_call), Location::After(g_call)]);
    }

    #[test]
    fn falls_back_to_end_of_entry() {
        let p = parse_program("x = a; y = x + 1;").unwrap();
        let c = candidates(&p);
        assert_eq!(c, [Criterion { at: Location::End, vars: ["x", "y"].map(String::from).into() }]);
        assert!(candidates(&parse_program("skip;").unwrap()).is_empty());
    }

    #[test]
    fn selection_is_seeded_and_capped() {
        let body: String = (0..15).map(|i| format!("if (a > {i}) {{ f(a); }}\n")).collect();
        let p = parse_program(&format!("f(p) {{ x = p; }}\nmain() {{\n{body}}}")).unwrap();
        let a = select(&p, "prog", 7, 10);
        assert_eq!(a.len(), 10);
        assert_eq!(a, select(&p, "prog", 7, 10));
        let labels: Vec<Label> = a.iter().map(|c| match c.at { Location::After(l) => l, _ => unreachable!() }).collect();
        assert!(labels.windows(2).all(|w| w[0] < w[1]));
    }
}
