//! Static backward and forward slicing over the program dependence graph.
//!
//! A criterion names a statement label and a set of variables.  The
//! backward slice collects every statement that can affect those
//! variables' values when execution reaches the statement; the forward
//! slice collects every statement those values can go on to affect.
//! Both are transitive closures over dependence edges.  Declarations
//! carry no dependences; backward slices keep them so the result stays a
//! compilable program, while forward slices report exact reachability.

use crate::dependence::{build_cfg, build_pdg_from_cfg, reaching_definitions, Cfg, Pdg};
use crate::lang::ast::{Label, Program};
use crate::lang::project;
use std::collections::BTreeSet;
use thiserror::Error;

/// Slicing criterion: a statement and the variables observed there.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Criterion {
    pub at: Label,
    pub vars: BTreeSet<String>,
}

impl Criterion {
    pub fn new(at: Label, vars: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Criterion {
            at,
            vars: vars.into_iter().map(Into::into).collect(),
        }
    }
}

impl std::fmt::Display for Criterion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let vars: Vec<&str> = self.vars.iter().map(String::as_str).collect();
        write!(f, "({}, {{{}}})", self.at, vars.join(", "))
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SliceError {
    #[error("no statement with label {0}")]
    UnknownLabel(Label),
    #[error("variable `{0}` is not declared")]
    UnknownVariable(String),
}

/// Result of a slicing request: the labels in the slice and the sliced
/// program obtained by projecting the original onto them.
#[derive(Debug, Clone)]
pub struct Slice {
    pub criterion: Criterion,
    pub labels: BTreeSet<Label>,
    pub program: Program,
}

fn check_criterion(p: &Program, c: &Criterion) -> Result<(), SliceError> {
    if !p.has_label(c.at) {
        return Err(SliceError::UnknownLabel(c.at));
    }
    for v in &c.vars {
        if !p.declares(v) {
            return Err(SliceError::UnknownVariable(v.clone()));
        }
    }
    Ok(())
}

/// Definitions of `var` reaching the point just before any execution of
/// `at`.  A `for` header owns several control-flow nodes (inits, test,
/// updates) and its test is re-entered from the loop body, so the union
/// over all of the label's nodes is what a criterion anchored at the
/// header can observe.
fn defs_reaching(p: &Program, cfg: &Cfg, at: Label, var: &str) -> BTreeSet<Label> {
    let rd = reaching_definitions(cfg);
    let _ = p;
    cfg.nodes
        .iter()
        .copied()
        .filter(|n| n.label() == Some(at))
        .flat_map(|n| rd.defs_of_at(var, n).filter_map(|d| d.label()))
        .collect()
}

/// Does the statement at `l` (including a `for` header's init/update
/// parts) define `var`?
fn label_defines(cfg: &Cfg, l: Label, var: &str) -> bool {
    cfg.nodes
        .iter()
        .filter(|n| n.label() == Some(l))
        .any(|&n| cfg.facts_of(n).defs.contains(var))
}

pub fn backward_slice(p: &Program, c: &Criterion) -> Result<Slice, SliceError> {
    check_criterion(p, c)?;
    let cfg = build_cfg(p);
    let pdg = build_pdg_from_cfg(p, &cfg);
    let mut seeds: BTreeSet<Label> = [c.at].into_iter().collect();
    for v in &c.vars {
        seeds.extend(defs_reaching(p, &cfg, c.at, v));
    }
    let mut labels = pdg.backward_closure(&seeds);
    labels.extend(p.decl_labels());
    let program = project(p, &labels).expect("slice labels come from the program");
    Ok(Slice {
        criterion: c.clone(),
        labels,
        program,
    })
}

pub fn forward_slice(p: &Program, c: &Criterion) -> Result<Slice, SliceError> {
    check_criterion(p, c)?;
    let cfg = build_cfg(p);
    let pdg = build_pdg_from_cfg(p, &cfg);
    let mut seeds: BTreeSet<Label> = [c.at].into_iter().collect();
    for v in &c.vars {
        if !label_defines(&cfg, c.at, v) {
            seeds.extend(defs_reaching(p, &cfg, c.at, v));
        }
    }
    let labels = pdg.forward_closure(&seeds);
    // Projection re-adds enclosing predicates and declarations so the
    // result parses; the reported label set stays exact.
    let program = project(p, &labels).expect("slice labels come from the program");
    Ok(Slice {
        criterion: c.clone(),
        labels,
        program,
    })
}

/// The dependence graph used by the slicers, exposed for reporting.
pub fn pdg_of(p: &Program) -> Pdg {
    let cfg = build_cfg(p);
    build_pdg_from_cfg(p, &cfg)
}
