//! Graphviz export for the control-flow and program dependence graphs.
//!
//! Output is deterministic: nodes appear in graph order, edges sorted.
//! Data edges are solid and labeled with the variable; control edges are
//! dashed and labeled with the branch that enables the target.

use super::cfg::{build_cfg, BranchTag, Cfg, CfgNode};
use super::pdg::{build_pdg, ControlSource};
use crate::lang::ast::{Program, StmtKind};
use crate::lang::{stmt_text, unparse::assign_text};

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn node_id(n: CfgNode) -> String {
    match n {
        CfgNode::Entry => "entry".into(),
        CfgNode::Exit => "exit".into(),
        CfgNode::Stmt(l) => format!("n{l}"),
        CfgNode::ForInit(l, i) => format!("n{l}i{i}"),
        CfgNode::ForUpdate(l, i) => format!("n{l}u{i}"),
    }
}

fn cfg_node_text(p: &Program, n: CfgNode) -> String {
    match n {
        CfgNode::Entry => "Entry".into(),
        CfgNode::Exit => "Exit".into(),
        CfgNode::Stmt(l) => format!("L{l}: {}", stmt_text(p, l).unwrap_or_default()),
        CfgNode::ForInit(l, i) | CfgNode::ForUpdate(l, i) => {
            let part = p.stmt(l).and_then(|s| match &s.kind {
                StmtKind::For { init, update, .. } => {
                    let list = if matches!(n, CfgNode::ForInit(..)) { init } else { update };
                    list.get(i as usize).map(assign_text)
                }
                _ => None,
            });
            format!("L{l}: {}", part.unwrap_or_default())
        }
    }
}

fn tag_attr(tag: BranchTag) -> &'static str {
    match tag {
        BranchTag::Seq => "",
        BranchTag::True => " [label=\"T\"]",
        BranchTag::False => " [label=\"F\"]",
    }
}

pub fn cfg_dot(p: &Program) -> String {
    let cfg: Cfg = build_cfg(p);
    let mut out = String::from("digraph cfg {\n");
    for &n in &cfg.nodes {
        out.push_str(&format!(
            "    {} [label=\"{}\"{}];\n",
            node_id(n),
            escape(&cfg_node_text(p, n)),
            if matches!(n, CfgNode::Entry | CfgNode::Exit) {
                ", shape=oval"
            } else {
                ", shape=box"
            }
        ));
    }
    for &n in &cfg.nodes {
        for &(s, tag) in cfg.succs_of(n) {
            out.push_str(&format!(
                "    {} -> {}{};\n",
                node_id(n),
                node_id(s),
                tag_attr(tag)
            ));
        }
    }
    out.push_str("}\n");
    out
}

pub fn pdg_dot(p: &Program) -> String {
    let pdg = build_pdg(p);
    let mut out = String::from("digraph pdg {\n");
    out.push_str("    entry [label=\"Entry\", shape=oval];\n");
    for &l in &pdg.labels {
        out.push_str(&format!(
            "    n{l} [label=\"L{l}: {}\", shape=box];\n",
            escape(&stmt_text(p, l).unwrap_or_default())
        ));
    }
    for (d, u, v) in &pdg.data {
        out.push_str(&format!("    n{d} -> n{u} [label=\"{v}\"];\n"));
    }
    for (s, t, tag) in &pdg.control {
        let src = match s {
            ControlSource::Entry => "entry".to_string(),
            ControlSource::Stmt(l) => format!("n{l}"),
        };
        let tag_text = match tag {
            BranchTag::True => "T",
            BranchTag::False => "F",
            BranchTag::Seq => "",
        };
        out.push_str(&format!(
            "    {src} -> n{t} [style=dashed, label=\"{tag_text}\"];\n"
        ));
    }
    out.push_str("}\n");
    out
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
    fn cfg_dot_shows_branch_tags_and_header_parts() {
        let dot = cfg_dot(&fixture("fig1"));
        assert!(dot.starts_with("digraph cfg {"));
        assert!(dot.contains("n5i0 [label=\"L5: counter = 1\""));
        assert!(dot.contains("n5u0 [label=\"L5: counter = counter + 1\""));
        assert!(dot.contains("[label=\"T\"]"));
        assert!(dot.contains("[label=\"F\"]"));
    }

    #[test]
    fn pdg_dot_distinguishes_data_from_control() {
        let dot = pdg_dot(&fixture("fig6"));
        assert!(dot.contains("n1 [label=\"L1: int n, i, x;\""));
        assert!(dot.contains("n2 -> n4 [label=\"n\"];"));
        assert!(dot.contains("style=dashed"));
        assert!(dot.contains("entry -> n9 [style=dashed, label=\"T\"];"));
    }

    #[test]
    fn output_is_deterministic() {
        let p = fixture("fig9");
        assert_eq!(pdg_dot(&p), pdg_dot(&p));
        assert_eq!(cfg_dot(&p), cfg_dot(&p));
    }

    #[test]
    fn empty_program_still_renders() {
        let p = normalize(&parse("").unwrap());
        let dot = cfg_dot(&p);
        assert!(dot.contains("entry -> exit"));
        assert!(pdg_dot(&p).contains("digraph pdg"));
    }
}
