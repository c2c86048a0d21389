//! Program dependence graph at statement-label granularity.
//!
//! Data edges `(def, use, variable)` come from reaching definitions; a
//! control edge `(source, target, branch)` records that `target` runs
//! only when `source` takes `branch`.  The underlying analyses work on
//! expanded control-flow nodes; here every node folds back onto its
//! owning label, so a `for` statement's init, predicate and update
//! contribute edges to and from one label.

use super::cfg::{build_cfg, BranchTag, Cfg, CfgNode};
use super::control::control_dependences;
use super::reaching::reaching_definitions;
use crate::lang::ast::{Label, Program};
use std::collections::{BTreeMap, BTreeSet};

/// Source of a control edge: a predicate's label, or the virtual entry
/// node for top-level statements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ControlSource {
    Entry,
    Stmt(Label),
}

#[derive(Debug, Clone)]
pub struct Pdg {
    /// Every label in the program, declarations included.
    pub labels: BTreeSet<Label>,
    /// `(def, use, variable)`: the value written at `def` may be read at `use`.
    pub data: BTreeSet<(Label, Label, String)>,
    /// `(source, target, branch)` control dependences.
    pub control: BTreeSet<(ControlSource, Label, BranchTag)>,
}

impl Pdg {
    /// Labels with an edge into `l` (data defs and controlling predicates).
    pub fn preds_of(&self, l: Label) -> BTreeSet<Label> {
        let mut out = BTreeSet::new();
        for (d, u, _) in &self.data {
            if *u == l {
                out.insert(*d);
            }
        }
        for (s, t, _) in &self.control {
            if *t == l {
                if let ControlSource::Stmt(sl) = s {
                    out.insert(*sl);
                }
            }
        }
        out
    }

    /// Labels with an edge out of `l`.
    pub fn succs_of(&self, l: Label) -> BTreeSet<Label> {
        let mut out = BTreeSet::new();
        for (d, u, _) in &self.data {
            if *d == l {
                out.insert(*u);
            }
        }
        for (s, t, _) in &self.control {
            if *s == ControlSource::Stmt(l) {
                out.insert(*t);
            }
        }
        out
    }

    /// Transitive closure over incoming edges, seeds included.
    pub fn backward_closure(&self, seeds: &BTreeSet<Label>) -> BTreeSet<Label> {
        self.closure(seeds, |l| self.preds_of(l))
    }

    /// Transitive closure over outgoing edges, seeds included.
    pub fn forward_closure(&self, seeds: &BTreeSet<Label>) -> BTreeSet<Label> {
        self.closure(seeds, |l| self.succs_of(l))
    }

    fn closure(
        &self,
        seeds: &BTreeSet<Label>,
        step: impl Fn(Label) -> BTreeSet<Label>,
    ) -> BTreeSet<Label> {
        let mut seen: BTreeSet<Label> = seeds.clone();
        let mut work: Vec<Label> = seeds.iter().copied().collect();
        while let Some(l) = work.pop() {
            for n in step(l) {
                if seen.insert(n) {
                    work.push(n);
                }
            }
        }
        seen
    }
}

pub fn build_pdg(p: &Program) -> Pdg {
    let cfg = build_cfg(p);
    build_pdg_from_cfg(p, &cfg)
}

pub fn build_pdg_from_cfg(p: &Program, cfg: &Cfg) -> Pdg {
    let rd = reaching_definitions(cfg);
    let mut data = BTreeSet::new();
    for &u in &cfg.nodes {
        let Some(use_label) = u.label() else { continue };
        for v in &cfg.facts_of(u).uses {
            for d in rd.defs_of_at(v, u) {
                if let Some(def_label) = d.label() {
                    data.insert((def_label, use_label, v.clone()));
                }
            }
        }
    }

    let mut control = BTreeSet::new();
    for (src, tag, tgt) in control_dependences(cfg) {
        let Some(target) = tgt.label() else { continue };
        let source = match src {
            CfgNode::Entry => ControlSource::Entry,
            other => match other.label() {
                Some(l) => ControlSource::Stmt(l),
                None => continue,
            },
        };
        control.insert((source, target, tag));
    }

    Pdg {
        labels: p.labels().into_iter().collect(),
        data,
        control,
    }
}

/// Data edges grouped per use site: for each label, which labels define
/// each variable it uses.  Convenient for reports.
pub fn data_edges_by_use(pdg: &Pdg) -> BTreeMap<Label, BTreeMap<String, BTreeSet<Label>>> {
    let mut out: BTreeMap<Label, BTreeMap<String, BTreeSet<Label>>> = BTreeMap::new();
    for (d, u, v) in &pdg.data {
        out.entry(*u).or_default().entry(v.clone()).or_default().insert(*d);
    }
    out
}
