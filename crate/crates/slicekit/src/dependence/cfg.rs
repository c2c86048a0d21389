//! Control-flow graph construction.
//!
//! Nodes are statement labels plus synthetic `Entry`/`Exit`.  A `for`
//! statement occupies several nodes sharing its one label: each init
//! assignment, the predicate, and each update assignment become distinct
//! nodes (`ForInit`, the labeled predicate, `ForUpdate`).  That keeps
//! def/kill sets per node exact — a variable assigned only in the init
//! list must not kill definitions flowing around the back edge — while
//! labels stay the unit of slicing.
//!
//! Each node also records its defined and used variable names.  Array
//! element writes are *weak* definitions: `a[i] = x` defines `a` but
//! kills nothing, since other elements survive.  An increment embedded in
//! a short-circuit arm (`p && ++i`) is weak too — it may not run.

use crate::lang::ast::*;
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CfgNode {
    Entry,
    Exit,
    /// A labeled statement; for a `for` statement, its predicate.
    Stmt(Label),
    /// The i-th init assignment of the `for` at this label.
    ForInit(Label, u32),
    /// The i-th update assignment of the `for` at this label.
    ForUpdate(Label, u32),
}

impl CfgNode {
    /// The statement label this node belongs to, if any.
    pub fn label(&self) -> Option<Label> {
        match self {
            CfgNode::Stmt(l) | CfgNode::ForInit(l, _) | CfgNode::ForUpdate(l, _) => Some(*l),
            _ => None,
        }
    }
}

impl std::fmt::Display for CfgNode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CfgNode::Entry => write!(f, "Entry"),
            CfgNode::Exit => write!(f, "Exit"),
            CfgNode::Stmt(l) => write!(f, "L{l}"),
            CfgNode::ForInit(l, i) => write!(f, "L{l}.init{}", i + 1),
            CfgNode::ForUpdate(l, i) => write!(f, "L{l}.update{}", i + 1),
        }
    }
}

/// Edge tag: sequential flow, or the branch taken out of a predicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BranchTag {
    Seq,
    True,
    False,
}

/// Per-node def/use facts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NodeFacts {
    pub defs: BTreeSet<String>,
    /// Subset of `defs` that definitely executes and overwrites the whole
    /// variable — the kill set for reaching definitions.
    pub strong_defs: BTreeSet<String>,
    pub uses: BTreeSet<String>,
}

#[derive(Debug, Clone)]
pub struct Cfg {
    /// All nodes in construction (roughly source) order; `Entry` first,
    /// `Exit` last.  Analyses iterate this order for determinism.
    pub nodes: Vec<CfgNode>,
    pub succs: BTreeMap<CfgNode, Vec<(CfgNode, BranchTag)>>,
    pub preds: BTreeMap<CfgNode, Vec<(CfgNode, BranchTag)>>,
    pub facts: BTreeMap<CfgNode, NodeFacts>,
}

impl Cfg {
    pub fn succs_of(&self, n: CfgNode) -> &[(CfgNode, BranchTag)] {
        self.succs.get(&n).map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn preds_of(&self, n: CfgNode) -> &[(CfgNode, BranchTag)] {
        self.preds.get(&n).map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn facts_of(&self, n: CfgNode) -> &NodeFacts {
        static EMPTY: std::sync::OnceLock<NodeFacts> = std::sync::OnceLock::new();
        self.facts
            .get(&n)
            .unwrap_or_else(|| EMPTY.get_or_init(NodeFacts::default))
    }

    /// Predicate nodes: exactly the nodes with a true- and a false-edge.
    pub fn is_predicate(&self, n: CfgNode) -> bool {
        self.succs_of(n)
            .iter()
            .any(|(_, t)| matches!(t, BranchTag::True | BranchTag::False))
    }
}

struct Builder {
    nodes: Vec<CfgNode>,
    succs: BTreeMap<CfgNode, Vec<(CfgNode, BranchTag)>>,
    preds: BTreeMap<CfgNode, Vec<(CfgNode, BranchTag)>>,
    facts: BTreeMap<CfgNode, NodeFacts>,
    /// Dangling edges waiting for the next node.
    pending: Vec<(CfgNode, BranchTag)>,
}

impl Builder {
    fn add_node(&mut self, n: CfgNode, facts: NodeFacts) {
        self.nodes.push(n);
        self.facts.insert(n, facts);
        self.succs.entry(n).or_default();
        self.preds.entry(n).or_default();
    }

    fn edge(&mut self, from: CfgNode, to: CfgNode, tag: BranchTag) {
        self.succs.entry(from).or_default().push((to, tag));
        self.preds.entry(to).or_default().push((from, tag));
    }

    /// Connects all pending edges to `n` and makes `n` the sole pending
    /// source.
    fn wire(&mut self, n: CfgNode) {
        for (from, tag) in std::mem::take(&mut self.pending) {
            self.edge(from, n, tag);
        }
        self.pending.push((n, BranchTag::Seq));
    }

    fn build_stmts(&mut self, stmts: &[Stmt]) {
        for s in stmts {
            self.build_stmt(s);
        }
    }

    fn build_stmt(&mut self, s: &Stmt) {
        let node = CfgNode::Stmt(s.label);
        match &s.kind {
            StmtKind::Assign(a) => {
                self.add_node(node, assign_facts(a));
                self.wire(node);
            }
            StmtKind::MultiAssign { targets, value } => {
                // Pre-normalization form; all targets defined, value read.
                let mut f = NodeFacts::default();
                for t in targets {
                    lvalue_def(t, true, &mut f);
                }
                expr_facts(value, false, &mut f);
                self.add_node(node, f);
                self.wire(node);
            }
            StmtKind::Read(lv) => {
                let mut f = NodeFacts::default();
                lvalue_def(lv, true, &mut f);
                self.add_node(node, f);
                self.wire(node);
            }
            StmtKind::Print(e) => {
                let mut f = NodeFacts::default();
                expr_facts(e, false, &mut f);
                self.add_node(node, f);
                self.wire(node);
            }
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                let mut f = NodeFacts::default();
                expr_facts(cond, false, &mut f);
                self.add_node(node, f);
                self.wire(node);
                self.pending.clear();
                self.pending.push((node, BranchTag::True));
                self.build_stmts(then_branch);
                let mut exits = std::mem::take(&mut self.pending);
                self.pending.push((node, BranchTag::False));
                if let Some(els) = else_branch {
                    self.build_stmts(els);
                }
                exits.append(&mut self.pending);
                self.pending = exits;
            }
            StmtKind::While { cond, body } => {
                let mut f = NodeFacts::default();
                expr_facts(cond, false, &mut f);
                self.add_node(node, f);
                self.wire(node);
                self.pending.clear();
                self.pending.push((node, BranchTag::True));
                self.build_stmts(body);
                for (from, tag) in std::mem::take(&mut self.pending) {
                    self.edge(from, node, tag);
                }
                self.pending.push((node, BranchTag::False));
            }
            StmtKind::For {
                init,
                cond,
                update,
                body,
            } => {
                for (i, a) in init.iter().enumerate() {
                    let n = CfgNode::ForInit(s.label, i as u32);
                    self.add_node(n, assign_facts(a));
                    self.wire(n);
                }
                let mut f = NodeFacts::default();
                expr_facts(cond, false, &mut f);
                self.add_node(node, f);
                self.wire(node);
                self.pending.clear();
                self.pending.push((node, BranchTag::True));
                self.build_stmts(body);
                for (i, a) in update.iter().enumerate() {
                    let n = CfgNode::ForUpdate(s.label, i as u32);
                    self.add_node(n, assign_facts(a));
                    self.wire(n);
                }
                for (from, tag) in std::mem::take(&mut self.pending) {
                    self.edge(from, node, tag);
                }
                self.pending.push((node, BranchTag::False));
            }
        }
    }
}

fn lvalue_def(lv: &LValue, unconditional: bool, f: &mut NodeFacts) {
    match lv {
        LValue::Var(n) => {
            f.defs.insert(n.clone());
            if unconditional {
                f.strong_defs.insert(n.clone());
            }
        }
        LValue::Elem(n, idx) => {
            // Element write: weak definition of the array, index is read.
            f.defs.insert(n.clone());
            expr_facts(idx, !unconditional, f);
        }
    }
}

/// Collects uses (and embedded `++`/`--` definitions) from an expression.
/// `conditional` is true inside the right arm of `&&`/`||`, where
/// evaluation — and hence any embedded definition — may not happen.
fn expr_facts(e: &Expr, conditional: bool, f: &mut NodeFacts) {
    match e {
        Expr::Int(_) => {}
        Expr::LValue(lv) => lvalue_use(lv, conditional, f),
        Expr::Unary(_, inner) => expr_facts(inner, conditional, f),
        Expr::IncDec { target, .. } => {
            lvalue_use(target, conditional, f);
            lvalue_def(target, !conditional, f);
        }
        Expr::Binary(op, l, r) => {
            expr_facts(l, conditional, f);
            let rhs_conditional = conditional || matches!(op, BinOp::And | BinOp::Or);
            expr_facts(r, rhs_conditional, f);
        }
    }
}

fn lvalue_use(lv: &LValue, conditional: bool, f: &mut NodeFacts) {
    match lv {
        LValue::Var(n) => {
            f.uses.insert(n.clone());
        }
        LValue::Elem(n, idx) => {
            f.uses.insert(n.clone());
            expr_facts(idx, conditional, f);
        }
    }
}

fn assign_facts(a: &Assign) -> NodeFacts {
    let mut f = NodeFacts::default();
    match a {
        Assign::Set { target, op, value } => {
            // A compound assignment reads its target too.
            if *op != AssignOp::Set {
                lvalue_use(target, false, &mut f);
            }
            expr_facts(value, false, &mut f);
            lvalue_def(target, true, &mut f);
        }
        Assign::IncDec { target, .. } => {
            lvalue_use(target, false, &mut f);
            lvalue_def(target, true, &mut f);
        }
    }
    f
}

pub fn build_cfg(p: &Program) -> Cfg {
    let mut b = Builder {
        nodes: Vec::new(),
        succs: BTreeMap::new(),
        preds: BTreeMap::new(),
        facts: BTreeMap::new(),
        pending: Vec::new(),
    };
    b.add_node(CfgNode::Entry, NodeFacts::default());
    b.pending.push((CfgNode::Entry, BranchTag::Seq));
    // Declarations are pass-through nodes with no defs or uses.
    for d in &p.decls {
        let n = CfgNode::Stmt(d.label);
        b.add_node(n, NodeFacts::default());
        b.wire(n);
    }
    b.build_stmts(&p.body);
    b.add_node(CfgNode::Exit, NodeFacts::default());
    for (from, tag) in std::mem::take(&mut b.pending) {
        b.edge(from, CfgNode::Exit, tag);
    }
    Cfg {
        nodes: b.nodes,
        succs: b.succs,
        preds: b.preds,
        facts: b.facts,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{normalize, parse};

    fn fixture(name: &str) -> Program {
        let path = format!("{}/../../fixtures/{}.mj", env!("CARGO_MANIFEST_DIR"), name);
        normalize(&parse(&std::fs::read_to_string(path).unwrap()).unwrap())
    }

    #[test]
    fn fig6_has_eleven_nodes_and_correct_while_edges() {
        let cfg = build_cfg(&fixture("fig6"));
        assert_eq!(cfg.nodes.len(), 11); // Entry, labels 1-9, Exit
        let while_node = CfgNode::Stmt(Label(4));
        let succs = cfg.succs_of(while_node);
        assert!(succs.contains(&(CfgNode::Stmt(Label(5)), BranchTag::True)));
        assert!(succs.contains(&(CfgNode::Stmt(Label(9)), BranchTag::False)));
        // loop back edge from i = i + 1
        assert!(cfg
            .succs_of(CfgNode::Stmt(Label(8)))
            .contains(&(while_node, BranchTag::Seq)));
    }

    #[test]
    fn straight_line_program_chains_every_node() {
        let p = normalize(&parse("int x, y;\nx = 1;\ny = x;\nprint(y);").unwrap());
        let cfg = build_cfg(&p);
        let expected = [
            CfgNode::Entry,
            CfgNode::Stmt(Label(1)),
            CfgNode::Stmt(Label(2)),
            CfgNode::Stmt(Label(3)),
            CfgNode::Stmt(Label(4)),
            CfgNode::Exit,
        ];
        assert_eq!(cfg.nodes, expected);
        for w in expected.windows(2) {
            assert!(cfg.succs_of(w[0]).iter().any(|(n, _)| *n == w[1]));
        }
    }

    #[test]
    fn predicates_have_exactly_two_successors_others_one() {
        for name in ["fig1", "fig3", "fig6", "fig9", "fig11", "fig13"] {
            let cfg = build_cfg(&fixture(name));
            for &n in &cfg.nodes {
                let succs = cfg.succs_of(n);
                match n {
                    CfgNode::Exit => assert!(succs.is_empty()),
                    _ if cfg.is_predicate(n) => {
                        assert_eq!(succs.len(), 2, "{name}: {n} has {succs:?}")
                    }
                    _ => assert_eq!(succs.len(), 1, "{name}: {n} has {succs:?}"),
                }
            }
            assert!(cfg.preds_of(CfgNode::Entry).is_empty());
        }
    }

    #[test]
    fn for_header_expands_to_init_pred_update_nodes() {
        let cfg = build_cfg(&fixture("fig1"));
        // decl(1), read(2), product(3), sum(4), for(5) = init+pred+update,
        // body 6 and 7, prints 8 and 9, plus Entry/Exit
        assert!(cfg.nodes.contains(&CfgNode::ForInit(Label(5), 0)));
        assert!(cfg.nodes.contains(&CfgNode::ForUpdate(Label(5), 0)));
        let pred = CfgNode::Stmt(Label(5));
        assert!(cfg.is_predicate(pred));
        // init flows into the predicate, update flows back into it
        assert!(cfg
            .succs_of(CfgNode::ForInit(Label(5), 0))
            .iter()
            .any(|(n, _)| *n == pred));
        assert!(cfg
            .succs_of(CfgNode::ForUpdate(Label(5), 0))
            .iter()
            .any(|(n, _)| *n == pred));
        // the update node both defines and uses counter
        let f = cfg.facts_of(CfgNode::ForUpdate(Label(5), 0));
        assert!(f.defs.contains("counter") && f.uses.contains("counter"));
    }

    #[test]
    fn fig9_while_false_edge_reaches_the_post_loop_if() {
        let cfg = build_cfg(&fixture("fig9"));
        let while_node = CfgNode::Stmt(Label(10));
        assert!(cfg
            .succs_of(while_node)
            .contains(&(CfgNode::Stmt(Label(26)), BranchTag::False)));
    }

    #[test]
    fn array_write_is_a_weak_def_and_reads_its_index() {
        let p = normalize(&parse("int a[5], i, x;\na[i] = x;").unwrap());
        let cfg = build_cfg(&p);
        let f = cfg.facts_of(CfgNode::Stmt(Label(2)));
        assert!(f.defs.contains("a"));
        assert!(!f.strong_defs.contains("a"));
        assert_eq!(
            f.uses,
            ["i", "x"].iter().map(|s| s.to_string()).collect()
        );
    }

    #[test]
    fn short_circuit_increment_is_a_weak_def() {
        let p = normalize(&parse("int p, i, x;\nx = p && ++i;").unwrap());
        let cfg = build_cfg(&p);
        let f = cfg.facts_of(CfgNode::Stmt(Label(2)));
        assert!(f.defs.contains("i"));
        assert!(!f.strong_defs.contains("i"));
        assert!(f.strong_defs.contains("x"));
    }

    #[test]
    fn empty_program_is_entry_to_exit() {
        let cfg = build_cfg(&normalize(&parse("").unwrap()));
        assert_eq!(cfg.nodes, vec![CfgNode::Entry, CfgNode::Exit]);
        assert_eq!(
            cfg.succs_of(CfgNode::Entry),
            &[(CfgNode::Exit, BranchTag::Seq)]
        );
    }
}
