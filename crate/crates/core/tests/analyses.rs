//! CFG, reaching definitions, post-dominance and control dependence checked
//! against brute-force computations from their definitions.

mod common;

use std::collections::{BTreeMap, BTreeSet};

use dslice_core::cdeps::{post_dominators, ControlDeps, Strength};
use dslice_core::cfg::{build_cfg, Branch, Cfg, EdgeKind, Node, NodeId};
use dslice_core::dataflow::{reaching_definitions, reaching_definitions_in_order, Definition};
use dslice_core::interp::run;
use dslice_core::lang::{parse_program, Label};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;

fn cfg_of(src: &str) -> Cfg {
    build_cfg(&parse_program(src).expect("generated program parses"))
}

fn succ(g: &Cfg, n: NodeId) -> Vec<NodeId> {
    g.out_edges(n).map(|e| e.dst).collect()
}

/// Nodes reachable from `from` without entering `avoid`.
fn reach_avoiding(g: &Cfg, from: NodeId, avoid: Option<NodeId>) -> BTreeSet<NodeId> {
    let mut seen = BTreeSet::new();
    if Some(from) == avoid {
        return seen;
    }
    let mut stack = vec![from];
    seen.insert(from);
    while let Some(x) = stack.pop() {
        for y in succ(g, x) {
            if Some(y) != avoid && seen.insert(y) {
                stack.push(y);
            }
        }
    }
    seen
}

/// Every path from `n1` to EXIT contains `n2`.
fn weak_pdom(g: &Cfg, n2: NodeId, n1: NodeId) -> bool {
    n1 == n2 || !reach_avoiding(g, n1, Some(n2)).contains(&NodeId::EXIT)
}

/// Every infinite path from `n1` contains `n2`: with `n2` removed, no cycle
/// is reachable from `n1`.
fn strong_pdom(g: &Cfg, n2: NodeId, n1: NodeId) -> bool {
    if n1 == n2 {
        return true;
    }
    let from_n1 = reach_avoiding(g, n1, Some(n2));
    !from_n1.iter().any(|&x| succ(g, x).into_iter().any(|y| y != n2 && reach_avoiding(g, y, Some(n2)).contains(&x)))
}

/// All simple paths from `from` to `to` that never visit `banned`.
fn simple_paths(g: &Cfg, from: NodeId, to: NodeId, banned: NodeId, limit: usize) -> Vec<Vec<NodeId>> {
    fn go(g: &Cfg, n: NodeId, to: NodeId, path: &mut Vec<NodeId>, out: &mut Vec<Vec<NodeId>>, limit: usize) {
        if out.len() >= limit {
            return;
        }
        path.push(n);
        if n == to {
            out.push(path.clone());
        } else {
            for e in g.out_edges(n).filter(|e| !e.special) {
                if !path.contains(&e.dst) {
                    go(g, e.dst, to, path, out, limit);
                }
            }
        }
        path.pop();
    }
    let mut out = Vec::new();
    let mut path = vec![banned];
    go(g, from, to, &mut path, &mut out, limit);
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn cfg_shape(src in common::program(false, true)) {
        let g = cfg_of(&src);
        let from_entry = reach_avoiding(&g, NodeId::ENTRY, None);
        for n in g.node_ids() {
            prop_assert!(from_entry.contains(&n), "{n:?} unreachable");
            prop_assert!(reach_avoiding(&g, n, None).contains(&NodeId::EXIT));
            let outs: Vec<_> = g.out_edges(n).filter(|e| !e.special).collect();
            if g.is_condition(n) {
                let kinds: BTreeSet<_> = outs.iter().map(|e| e.kind).collect();
                prop_assert_eq!(kinds, BTreeSet::from([EdgeKind::Cond(Branch::True), EdgeKind::Cond(Branch::False)]));
            } else if n != NodeId::EXIT {
                prop_assert_eq!(outs.len(), 1);
            }
        }
        prop_assert!(g.edges().iter().any(|e| e.src == NodeId::ENTRY && e.dst == NodeId::EXIT && e.special));
        prop_assert!(g.edges().iter().any(|e| e.src == NodeId::EXIT && e.dst == NodeId::EXIT && e.special));
    }

    #[test]
    fn reaching_definitions_are_order_independent(src in common::program(false, true), seed in any::<u64>()) {
        let g = cfg_of(&src);
        let base = reaching_definitions(&g);
        let mut order: Vec<NodeId> = g.node_ids().collect();
        order.shuffle(&mut rand::rngs::StdRng::seed_from_u64(seed));
        let other = reaching_definitions_in_order(&g, &order);
        for n in g.node_ids() {
            let a: BTreeSet<_> = base.reaching(n).collect();
            let b: BTreeSet<_> = other.reaching(n).collect();
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn reaching_definitions_cover_executed_definitions(src in common::program(false, true), input in common::input()) {
        let p = parse_program(&src).unwrap();
        let g = build_cfg(&p);
        let rm = reaching_definitions(&g);
        let trace = run(&p, &input, 5_000).unwrap();
        let mut last: BTreeMap<String, Label> = BTreeMap::new();
        for st in &trace.states {
            let Node::Stmt(l) = st.node else { continue };
            let id = g.id(l).unwrap();
            let reaching: BTreeSet<_> = rm.reaching(id).cloned().collect();
            for v in &g.info(id).refs {
                if let Some(&at) = last.get(v) {
                    prop_assert!(reaching.contains(&Definition { at, var: v.clone() }), "{at}:{v} missing at {l}");
                }
            }
            if let Some(v) = &g.info(id).def {
                last.insert(v.clone(), l);
            }
        }
    }

    #[test]
    fn du_is_monotone_in_variables(src in common::program(false, true), pick in any::<prop::sample::Index>()) {
        let g = cfg_of(&src);
        let rm = reaching_definitions(&g);
        let ids: Vec<NodeId> = g.statement_ids().collect();
        let l = g.label(ids[pick.index(ids.len())]).unwrap();
        let small: BTreeSet<String> = ["x".to_string()].into();
        let large: BTreeSet<String> = ["x".to_string(), "y".to_string(), "a".to_string()].into();
        prop_assert!(rm.du(&g, l, &small).is_subset(&rm.du(&g, l, &large)));
    }

    #[test]
    fn post_dominance_matches_definitions(src in common::program(false, true)) {
        let g = cfg_of(&src);
        let pd = post_dominators(&g);
        for n1 in g.node_ids() {
            for n2 in g.node_ids() {
                prop_assert_eq!(pd.weak(n2, n1), weak_pdom(&g, n2, n1), "weak {:?} {:?}", n2, n1);
                prop_assert_eq!(pd.strong(n2, n1), strong_pdom(&g, n2, n1), "strong {:?} {:?}", n2, n1);
                prop_assert!(!pd.strong(n2, n1) || pd.weak(n2, n1));
            }
        }
    }

    #[test]
    fn control_dependence_matches_definitions(src in common::program(false, true)) {
        let g = cfg_of(&src);
        let cd = ControlDeps::compute(&g);
        let mut expected = BTreeSet::new();
        for e in g.edges() {
            let EdgeKind::Cond(branch) = e.kind else { continue };
            for d in g.statement_ids() {
                if weak_pdom(&g, d, e.dst) && (d == e.src || !weak_pdom(&g, d, e.src)) {
                    expected.insert((e.src, branch, d, Strength::Strong));
                }
                if strong_pdom(&g, d, e.dst) && (d == e.src || !strong_pdom(&g, d, e.src)) {
                    expected.insert((e.src, branch, d, Strength::Weak));
                }
            }
        }
        let found: BTreeSet<_> = cd
            .edges()
            .iter()
            .map(|e| (g.id(e.cond).unwrap(), e.branch, g.id(e.dependent).unwrap(), e.strength))
            .collect();
        prop_assert_eq!(found, expected);
    }

    #[test]
    fn transitive_dependence_properties(src in common::program(false, false)) {
        let g = cfg_of(&src);
        let cd = ControlDeps::compute(&g);
        for s in g.statement_ids() {
            for &(c, f) in cd.tcntrls_flags(s) {
                prop_assert_ne!(c, s);
                // SP1: at most one edge of c reaches s through strong chains.
                prop_assert!(!(f.has(Branch::True, true) && f.has(Branch::False, true)), "SP1 at {:?} {:?}", c, s);
                for e in Branch::BOTH {
                    prop_assert!(!f.has(e, true) || f.has(e, false));
                    // SP2: with c --e--> s, no loop-free path leaves c by the
                    // other edge and reaches s.
                    if f.has(e, true) && g.len() <= 17 {
                        let other = g.branch_target(c, e.opposite()).unwrap();
                        let bypass = simple_paths(&g, other, s, c, 1);
                        prop_assert!(bypass.is_empty(), "SP2 at {:?} {:?}: {:?}", c, s, bypass);
                    }
                }
            }
        }
    }
}

/// With a `break` nested two conditions deep, the loop condition is reached
/// from both edges of the outer condition by strong chains: directly from
/// the false edge (back to the header) and through the inner condition's
/// false edge. SP1 therefore does not hold for such programs.
#[test]
fn nested_break_reaches_loop_header_from_both_edges() {
    let g = cfg_of("while (k < 1) { k = k + 1; if (a) { if (b) { break; } } }");
    let cd = ControlDeps::compute(&g);
    let (header, outer) = (g.id(Label(1)).unwrap(), g.id(Label(3)).unwrap());
    let f = cd.flags(header, outer);
    assert!(f.has(Branch::True, true) && f.has(Branch::False, true));
}

#[test]
fn loop_exit_dependence_is_weak_only() {
    let g = cfg_of("while (c > 0) { c = c - 1; } skip;");
    let cd = ControlDeps::compute(&g);
    let skip = g.id(Label(3)).unwrap();
    let c = g.id(Label(1)).unwrap();
    let f = cd.flags(skip, c);
    assert!(f.has(Branch::False, false));
    assert!(!f.any_strong());
}

#[test]
fn break_bypasses_rest_of_body() {
    let g = cfg_of("while (c) { if (d) { break; } x = 1; } skip;");
    let (cond, x, skip) = (g.id(Label(1)).unwrap(), g.id(Label(4)).unwrap(), g.id(Label(5)).unwrap());
    let paths = simple_paths(&g, g.branch_target(cond, Branch::True).unwrap(), skip, cond, 100);
    assert!(paths.iter().any(|p| !p.contains(&x)));
}
