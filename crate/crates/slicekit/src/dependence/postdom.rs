//! Postdominator computation, two independent ways.
//!
//! [`postdominators`] is the production algorithm: the iterative
//! immediate-dominator scheme of Cooper, Harvey and Kennedy run on the
//! reverse control-flow graph.  [`postdominator_sets`] is a direct
//! fixpoint over full postdominator sets — quadratic, but an independent
//! check that the tree and set views agree.

use super::cfg::{Cfg, CfgNode};
use std::collections::{BTreeMap, BTreeSet};

/// Immediate-postdominator tree.  `Exit` is the root and maps to itself.
#[derive(Debug, Clone)]
pub struct PostDomTree {
    pub ipdom: BTreeMap<CfgNode, CfgNode>,
}

impl PostDomTree {
    /// True when `a` postdominates `b` (reflexively).
    pub fn postdominates(&self, a: CfgNode, b: CfgNode) -> bool {
        let mut n = b;
        loop {
            if n == a {
                return true;
            }
            let up = self.ipdom[&n];
            if up == n {
                return false;
            }
            n = up;
        }
    }
}

/// Postorder of the reverse graph from `Exit`, following predecessor
/// edges.  Every node in a structured program reaches `Exit`, so the
/// traversal covers the whole graph.
fn reverse_postorder_numbers(cfg: &Cfg) -> (Vec<CfgNode>, BTreeMap<CfgNode, usize>) {
    let mut order = Vec::new();
    let mut visited = BTreeSet::new();
    // Iterative DFS with an explicit "children done" marker.
    let mut stack = vec![(CfgNode::Exit, false)];
    while let Some((n, done)) = stack.pop() {
        if done {
            order.push(n);
            continue;
        }
        if !visited.insert(n) {
            continue;
        }
        stack.push((n, true));
        for &(p, _) in cfg.preds_of(n) {
            if !visited.contains(&p) {
                stack.push((p, false));
            }
        }
    }
    let numbers = order
        .iter()
        .enumerate()
        .map(|(i, &n)| (n, i))
        .collect::<BTreeMap<_, _>>();
    (order, numbers)
}

pub fn postdominators(cfg: &Cfg) -> PostDomTree {
    let (postorder, number) = reverse_postorder_numbers(cfg);
    let mut ipdom: BTreeMap<CfgNode, CfgNode> = BTreeMap::new();
    ipdom.insert(CfgNode::Exit, CfgNode::Exit);

    let intersect = |ipdom: &BTreeMap<CfgNode, CfgNode>, mut a: CfgNode, mut b: CfgNode| {
        while a != b {
            while number[&a] < number[&b] {
                a = ipdom[&a];
            }
            while number[&b] < number[&a] {
                b = ipdom[&b];
            }
        }
        a
    };

    let mut changed = true;
    while changed {
        changed = false;
        // Reverse postorder of the reverse graph: Exit first.
        for &n in postorder.iter().rev() {
            if n == CfgNode::Exit {
                continue;
            }
            let mut new = None;
            for &(s, _) in cfg.succs_of(n) {
                if !ipdom.contains_key(&s) {
                    continue;
                }
                new = Some(match new {
                    None => s,
                    Some(cur) => intersect(&ipdom, cur, s),
                });
            }
            let new = new.expect("every node has a processed successor toward Exit");
            if ipdom.get(&n) != Some(&new) {
                ipdom.insert(n, new);
                changed = true;
            }
        }
    }
    PostDomTree { ipdom }
}

/// Full postdominator sets by fixpoint:
/// `pdom(Exit) = {Exit}`, `pdom(n) = {n} ∪ ⋂ pdom(succ)`.
/// Sets are reflexive.  Used as an oracle against [`postdominators`].
pub fn postdominator_sets(cfg: &Cfg) -> BTreeMap<CfgNode, BTreeSet<CfgNode>> {
    let all: BTreeSet<CfgNode> = cfg.nodes.iter().copied().collect();
    let mut pdom: BTreeMap<CfgNode, BTreeSet<CfgNode>> = cfg
        .nodes
        .iter()
        .map(|&n| {
            if n == CfgNode::Exit {
                (n, std::iter::once(n).collect())
            } else {
                (n, all.clone())
            }
        })
        .collect();
    let mut changed = true;
    while changed {
        changed = false;
        for &n in &cfg.nodes {
            if n == CfgNode::Exit {
                continue;
            }
            let mut new: Option<BTreeSet<CfgNode>> = None;
            for &(s, _) in cfg.succs_of(n) {
                new = Some(match new {
                    None => pdom[&s].clone(),
                    Some(cur) => cur.intersection(&pdom[&s]).copied().collect(),
                });
            }
            let mut new = new.unwrap_or_default();
            new.insert(n);
            if pdom[&n] != new {
                pdom.insert(n, new);
                changed = true;
            }
        }
    }
    pdom
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dependence::cfg::build_cfg;
    use crate::lang::ast::Label;
    use crate::lang::{normalize, parse};

    fn fixture(name: &str) -> Cfg {
        let path = format!("{}/../../fixtures/{}.mj", env!("CARGO_MANIFEST_DIR"), name);
        build_cfg(&normalize(
            &parse(&std::fs::read_to_string(path).unwrap()).unwrap(),
        ))
    }

    #[test]
    fn straight_line_ipdom_is_next_node() {
        let cfg = build_cfg(&normalize(&parse("int x;\nx = 1;\nprint(x);").unwrap()));
        let t = postdominators(&cfg);
        assert_eq!(t.ipdom[&CfgNode::Entry], CfgNode::Stmt(Label(1)));
        assert_eq!(t.ipdom[&CfgNode::Stmt(Label(1))], CfgNode::Stmt(Label(2)));
        assert_eq!(t.ipdom[&CfgNode::Stmt(Label(3))], CfgNode::Exit);
    }

    #[test]
    fn if_branches_postdominated_by_join() {
        let src = "int x, y;\nx = 1;\nif (x) { y = 1; } else { y = 2; }\nprint(y);";
        let cfg = build_cfg(&normalize(&parse(src).unwrap()));
        let t = postdominators(&cfg);
        // labels: decl 1, x=1 2, if 3, y=1 4, y=2 5, print 6
        assert_eq!(t.ipdom[&CfgNode::Stmt(Label(3))], CfgNode::Stmt(Label(6)));
        assert_eq!(t.ipdom[&CfgNode::Stmt(Label(4))], CfgNode::Stmt(Label(6)));
        assert_eq!(t.ipdom[&CfgNode::Stmt(Label(5))], CfgNode::Stmt(Label(6)));
        assert!(t.postdominates(CfgNode::Stmt(Label(6)), CfgNode::Entry));
        assert!(!t.postdominates(CfgNode::Stmt(Label(4)), CfgNode::Stmt(Label(3))));
    }

    #[test]
    fn while_body_is_postdominated_by_the_predicate() {
        let cfg = fixture("fig6");
        let t = postdominators(&cfg);
        // body nodes 5..8 must all reach Exit through the while at 4
        for l in [5u32, 6, 7, 8] {
            assert!(
                t.postdominates(CfgNode::Stmt(Label(4)), CfgNode::Stmt(Label(l))),
                "label {l}"
            );
        }
        // ...but the predicate does not postdominate the code before it
        assert!(!t.postdominates(CfgNode::Stmt(Label(5)), CfgNode::Stmt(Label(4))));
    }

    #[test]
    fn tree_matches_set_fixpoint_on_all_fixtures() {
        for name in ["fig1", "fig3", "fig6", "fig9", "fig11", "fig13"] {
            let cfg = fixture(name);
            let tree = postdominators(&cfg);
            let sets = postdominator_sets(&cfg);
            for &a in &cfg.nodes {
                for &b in &cfg.nodes {
                    assert_eq!(
                        tree.postdominates(a, b),
                        sets[&b].contains(&a),
                        "{name}: {a} pdom {b}"
                    );
                }
            }
        }
    }
}
