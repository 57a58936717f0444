//! Seeded random programs for property runs.
//!
//! Programs are rendered as source and contain assignments, `if`, `while`,
//! `skip` and, optionally, `break`/`continue`. Statement counts stay within
//! the node limit (the CFG adds ENTRY and EXIT) and conditions nest at most
//! `max_depth` deep. Blocks stop after a statement control cannot fall out
//! of, so every statement is reachable.

use std::fmt::Write;

use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenConfig {
    /// CFG nodes, ENTRY and EXIT included.
    pub max_nodes: usize,
    pub max_depth: usize,
    pub jumps: bool,
    /// Loops count their iterations and stop after at most three.
    pub bounded_loops: bool,
}

impl GenConfig {
    pub const STANDARD: GenConfig = GenConfig { max_nodes: 60, max_depth: 3, jumps: true, bounded_loops: false };
    pub const SMALL: GenConfig = GenConfig { max_nodes: 15, max_depth: 3, jumps: true, bounded_loops: false };
}

const VARS: [&str; 6] = ["a", "b", "c", "x", "y", "z"];
const OPS: [&str; 11] = ["+", "-", "*", "<", "<=", ">", "==", "!=", ">=", "&&", "||"];

struct Gen<'r, R> {
    rng: &'r mut R,
    cfg: GenConfig,
    /// Statements still allowed.
    left: usize,
    loops: usize,
    out: String,
}

impl<R: Rng> Gen<'_, R> {
    fn expr(&mut self, depth: usize) -> String {
        if depth == 0 || self.rng.random_bool(0.4) {
            return if self.rng.random_bool(0.7) {
                VARS[self.rng.random_range(0..VARS.len())].to_string()
            } else {
                self.rng.random_range(-2..6).to_string()
            };
        }
        let op = OPS[self.rng.random_range(0..OPS.len())];
        format!("({} {op} {})", self.expr(depth - 1), self.expr(depth - 1))
    }

    fn line(&mut self, indent: usize, s: &str) {
        let _ = writeln!(self.out, "{}{s}", "  ".repeat(indent));
    }

    /// Emits up to `n` statements; returns whether the block can complete.
    fn block(&mut self, n: usize, depth: usize, in_loop: bool, indent: usize) -> bool {
        for _ in 0..n {
            if self.left == 0 {
                break;
            }
            if !self.stmt(depth, in_loop, indent) {
                return false;
            }
        }
        true
    }

    fn stmt(&mut self, depth: usize, in_loop: bool, indent: usize) -> bool {
        let nest = depth < self.cfg.max_depth;
        let loop_cost = if self.cfg.bounded_loops { 3 } else { 1 };
        let weights = [
            5,
            1,
            if nest { 2 } else { 0 },
            if nest && self.left >= loop_cost { 1 } else { 0 },
            if in_loop && self.cfg.jumps { 1 } else { 0 },
        ];
        let mut pick = self.rng.random_range(0..weights.iter().sum::<u32>());
        let kind = weights.iter().position(|&w| {
            let hit = pick < w;
            pick = pick.saturating_sub(w);
            hit
        });
        self.left -= 1;
        match kind.expect("weights are positive") {
            0 => {
                let (v, e) = (VARS[self.rng.random_range(0..VARS.len())], self.expr(2));
                self.line(indent, &format!("{v} = {e};"));
            }
            1 => self.line(indent, "skip;"),
            2 => {
                let c = self.expr(2);
                self.line(indent, &format!("if ({c}) {{"));
                let n = self.rng.random_range(0..4);
                let then_ok = self.block(n, depth + 1, in_loop, indent + 1);
                let n = self.rng.random_range(0..3);
                if n == 0 {
                    self.line(indent, "}");
                } else {
                    self.line(indent, "} else {");
                    let else_ok = self.block(n, depth + 1, in_loop, indent + 1);
                    self.line(indent, "}");
                    if !then_ok && !else_ok {
                        return false;
                    }
                }
            }
            3 => {
                let c = self.expr(2);
                let n = self.rng.random_range(1..4);
                if self.cfg.bounded_loops {
                    self.left -= 2;
                    let k = format!("k{}", self.loops);
                    self.loops += 1;
                    let trips = self.rng.random_range(1..4);
                    self.line(indent, &format!("{k} = 0;"));
                    self.line(indent, &format!("while ({k} < {trips} && {c}) {{"));
                    self.line(indent + 1, &format!("{k} = {k} + 1;"));
                } else {
                    self.line(indent, &format!("while ({c}) {{"));
                }
                self.block(n, depth + 1, true, indent + 1);
                self.line(indent, "}");
            }
            _ => {
                let j = if self.rng.random_bool(0.5) { "break;" } else { "continue;" };
                self.line(indent, j);
                return false;
            }
        }
        true
    }
}

/// A random program with between one statement and `max_nodes - 2`.
pub fn generate(rng: &mut impl Rng, cfg: GenConfig) -> String {
    let budget = cfg.max_nodes.saturating_sub(2).max(1);
    let left = rng.random_range(budget.div_ceil(3)..=budget);
    let mut g = Gen { rng, cfg, left, loops: 0, out: String::new() };
    while g.left > 0 {
        g.stmt(0, false, 0);
    }
    g.out
}

#[cfg(test)]
mod tests {
    use super::*;
    use dslice_core::cfg::build_cfg;
    use dslice_core::lang::{parse_program, StmtKind};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn depth(p: &dslice_core::lang::Program) -> usize {
        fn go(b: &[dslice_core::lang::Stmt]) -> usize {
            b.iter()
                .map(|s| match &s.kind {
                    StmtKind::If { then_branch, else_branch, .. } => 1 + go(then_branch).max(go(else_branch)),
                    StmtKind::While { body, .. } => 1 + go(body),
                    _ => 0,
                })
                .max()
                .unwrap_or(0)
        }
        go(&p.entry_procedure().body)
    }

    #[test]
    fn respects_limits() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for cfg in [GenConfig::STANDARD, GenConfig::SMALL, GenConfig { bounded_loops: true, ..GenConfig::STANDARD }] {
            for _ in 0..300 {
                let src = generate(&mut rng, cfg);
                let p = parse_program(&src).unwrap_or_else(|e| panic!("{e}\n{src}"));
                assert!(build_cfg(&p).len() <= cfg.max_nodes, "{src}");
                assert!(depth(&p) <= cfg.max_depth, "{src}");
            }
        }
    }

    #[test]
    fn seeded() {
        let a = generate(&mut ChaCha8Rng::seed_from_u64(9), GenConfig::STANDARD);
        let b = generate(&mut ChaCha8Rng::seed_from_u64(9), GenConfig::STANDARD);
        assert_eq!(a, b);
    }
}
