//! Control dependence.
//!
//! A node is control-dependent on a predicate when one branch of the
//! predicate guarantees its execution and the other can bypass it.  The
//! graph is augmented with an `Entry → Exit` edge before the analysis, so
//! top-level statements (executed unconditionally) come out
//! control-dependent on `Entry` rather than on nothing.
//!
//! [`control_dependences`] walks postdominator-tree paths per edge — the
//! standard production algorithm.  [`control_dependences_by_definition`]
//! evaluates the defining condition directly from postdominator sets,
//! quadratically, as an independent oracle.

use super::cfg::{BranchTag, Cfg, CfgNode};
use super::postdom::{postdominator_sets, postdominators};
use std::collections::BTreeSet;

/// One control dependence: `dependent` executes or not depending on which
/// branch `source` takes; `tag` is the branch that leads to execution.
pub type ControlDep = (CfgNode, BranchTag, CfgNode);

/// Clone of the graph with the augmenting `Entry --False--> Exit` edge;
/// `Entry`'s original out-edge becomes its true-branch.
fn augmented(cfg: &Cfg) -> Cfg {
    let mut g = cfg.clone();
    if let Some(out) = g.succs.get_mut(&CfgNode::Entry) {
        for (_, tag) in out.iter_mut() {
            *tag = BranchTag::True;
        }
        out.push((CfgNode::Exit, BranchTag::False));
    }
    if let Some(inn) = g.preds.get_mut(&CfgNode::Exit) {
        inn.push((CfgNode::Entry, BranchTag::False));
    }
    for targets in g.preds.values_mut() {
        for (p, tag) in targets.iter_mut() {
            if *p == CfgNode::Entry && *tag == BranchTag::Seq {
                *tag = BranchTag::True;
            }
        }
    }
    g
}

pub fn control_dependences(cfg: &Cfg) -> BTreeSet<ControlDep> {
    let g = augmented(cfg);
    let tree = postdominators(&g);
    let mut deps = BTreeSet::new();
    for &p in &g.nodes {
        let succs = g.succs_of(p);
        if succs.len() < 2 {
            continue;
        }
        let stop = tree.ipdom[&p];
        for &(s, tag) in succs {
            // Every node on the postdominator-tree path from `s` up to,
            // but excluding, ipdom(p) depends on (p, tag).  The path may
            // pass through `p` itself (loop predicates self-depend).
            let mut n = s;
            while n != stop {
                deps.insert((p, tag, n));
                n = tree.ipdom[&n];
            }
        }
    }
    deps
}

/// Direct evaluation of the defining condition: `m` depends on `(p, t)`
/// iff `p` has a `t`-successor that `m` postdominates (reflexively) and
/// `m` does not strictly postdominate `p`.
pub fn control_dependences_by_definition(cfg: &Cfg) -> BTreeSet<ControlDep> {
    let g = augmented(cfg);
    let sets = postdominator_sets(&g);
    let mut deps = BTreeSet::new();
    for &p in &g.nodes {
        let succs = g.succs_of(p);
        if succs.len() < 2 {
            continue;
        }
        for &m in &g.nodes {
            let strictly_postdominates_p = m != p && sets[&p].contains(&m);
            if strictly_postdominates_p {
                continue;
            }
            for &(s, tag) in succs {
                if sets[&s].contains(&m) {
                    deps.insert((p, tag, m));
                }
            }
        }
    }
    deps
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dependence::cfg::build_cfg;
    use crate::lang::ast::Label;
    use crate::lang::{normalize, parse};

    fn deps_for(src: &str) -> BTreeSet<ControlDep> {
        control_dependences(&build_cfg(&normalize(&parse(src).unwrap())))
    }

    fn fixture_cfg(name: &str) -> Cfg {
        let path = format!("{}/../../fixtures/{}.mj", env!("CARGO_MANIFEST_DIR"), name);
        build_cfg(&normalize(
            &parse(&std::fs::read_to_string(path).unwrap()).unwrap(),
        ))
    }

    #[test]
    fn top_level_statements_depend_on_entry() {
        let deps = deps_for("int x;\nx = 1;\nprint(x);");
        for l in [1u32, 2, 3] {
            assert!(deps.contains(&(CfgNode::Entry, BranchTag::True, CfgNode::Stmt(Label(l)))));
        }
    }

    #[test]
    fn if_branches_depend_on_the_predicate_with_matching_tags() {
        let deps =
            deps_for("int x, y;\nx = 1;\nif (x) { y = 1; } else { y = 2; }\nprint(y);");
        let p = CfgNode::Stmt(Label(3));
        assert!(deps.contains(&(p, BranchTag::True, CfgNode::Stmt(Label(4)))));
        assert!(deps.contains(&(p, BranchTag::False, CfgNode::Stmt(Label(5)))));
        // the join point does not depend on the predicate
        assert!(!deps.iter().any(|&(s, _, d)| s == p && d == CfgNode::Stmt(Label(6))));
        // an if-predicate does not depend on itself
        assert!(!deps.iter().any(|&(s, _, d)| s == p && d == p));
    }

    #[test]
    fn while_predicate_depends_on_itself_and_controls_its_body() {
        let deps = control_dependences(&fixture_cfg("fig6"));
        let w = CfgNode::Stmt(Label(4));
        assert!(deps.contains(&(w, BranchTag::True, w)));
        for l in [5u32, 8] {
            assert!(deps.contains(&(w, BranchTag::True, CfgNode::Stmt(Label(l)))));
        }
        // nested if at 5 controls 6 (true) and 7 (false)
        let p = CfgNode::Stmt(Label(5));
        assert!(deps.contains(&(p, BranchTag::True, CfgNode::Stmt(Label(6)))));
        assert!(deps.contains(&(p, BranchTag::False, CfgNode::Stmt(Label(7)))));
        // the print after the loop is back at top level
        assert!(deps.contains(&(CfgNode::Entry, BranchTag::True, CfgNode::Stmt(Label(9)))));
    }

    #[test]
    fn for_predicate_controls_body_update_and_itself_but_not_init() {
        let deps = control_dependences(&fixture_cfg("fig1"));
        let f = CfgNode::Stmt(Label(5));
        assert!(deps.contains(&(f, BranchTag::True, f)));
        assert!(deps.contains(&(f, BranchTag::True, CfgNode::Stmt(Label(6)))));
        assert!(deps.contains(&(f, BranchTag::True, CfgNode::ForUpdate(Label(5), 0))));
        // the init runs exactly once, before the predicate
        assert!(deps.contains(&(
            CfgNode::Entry,
            BranchTag::True,
            CfgNode::ForInit(Label(5), 0)
        )));
        assert!(!deps.contains(&(f, BranchTag::True, CfgNode::ForInit(Label(5), 0))));
    }

    #[test]
    fn production_walk_matches_direct_definition_on_all_fixtures() {
        for name in ["fig1", "fig3", "fig6", "fig9", "fig11", "fig13"] {
            let cfg = fixture_cfg(name);
            assert_eq!(
                control_dependences(&cfg),
                control_dependences_by_definition(&cfg),
                "{name}"
            );
        }
    }
}
