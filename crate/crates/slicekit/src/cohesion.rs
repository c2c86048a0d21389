//! Slice-based cohesion metrics.
//!
//! A module that computes several unrelated things from scratch yields
//! slices that barely overlap; a focused one yields slices that are
//! nearly the whole program.  Given a set of output variables, each
//! variable is sliced backward from the last statement that mentions it,
//! and three ratios over those slices quantify the overlap:
//!
//! * **tightness** — |⋂ SLᵥ| / |L|: how much of the program is in every
//!   slice;
//! * **coverage** — (1/k) Σ |SLᵥ| / |L|: how much of the program the
//!   average slice spans;
//! * **overlap** — (1/k) Σ |⋂ SLᵤ| / |SLᵥ|: how much of each slice is
//!   common to all of them.
//!
//! All three are exact rationals; |L| counts every label, declarations
//! included, matching what the slices themselves may contain.

use crate::dependence::build_cfg;
use crate::lang::ast::{Label, Program};
use crate::slicer::{backward_slice, Criterion, SliceError};
pub use num_rational::Rational64;
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CohesionError {
    #[error("no variables given")]
    NoVariables,
    #[error("variable `{0}` is not declared")]
    UnknownVariable(String),
    #[error("variable `{0}` is never referenced by any statement")]
    NeverReferenced(String),
    #[error(transparent)]
    Slice(#[from] SliceError),
}

/// One variable's contribution: where it was sliced from and what the
/// slice contains.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarSlice {
    /// Last statement that reads or writes the variable.
    pub at: Label,
    pub labels: BTreeSet<Label>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CohesionReport {
    /// Per-variable slices, keyed by variable name.
    pub slices: BTreeMap<String, VarSlice>,
    /// Labels common to every slice.
    pub intersection: BTreeSet<Label>,
    /// Total number of labels in the program.
    pub program_size: usize,
    pub tightness: Rational64,
    pub coverage: Rational64,
    pub overlap: Rational64,
}

/// Last label whose statement references (reads or writes) each requested
/// variable.  Control-flow facts supply the reference sets, so a `for`
/// header counts as referencing its counter and condition variables.
fn last_references(p: &Program, vars: &BTreeSet<String>) -> BTreeMap<String, Label> {
    let cfg = build_cfg(p);
    let mut last: BTreeMap<String, Label> = BTreeMap::new();
    for node in &cfg.nodes {
        let Some(label) = node.label() else { continue };
        let facts = cfg.facts_of(*node);
        for v in facts.uses.iter().chain(&facts.defs) {
            if vars.contains(v) {
                let slot = last.entry(v.clone()).or_insert(label);
                if label > *slot {
                    *slot = label;
                }
            }
        }
    }
    last
}

/// Slices each variable backward from its last reference and reports the
/// three overlap ratios.
pub fn cohesion(p: &Program, vars: &BTreeSet<String>) -> Result<CohesionReport, CohesionError> {
    if vars.is_empty() {
        return Err(CohesionError::NoVariables);
    }
    for v in vars {
        if !p.declares(v) {
            return Err(CohesionError::UnknownVariable(v.clone()));
        }
    }
    let last = last_references(p, vars);
    let mut slices = BTreeMap::new();
    for v in vars {
        let at = *last
            .get(v)
            .ok_or_else(|| CohesionError::NeverReferenced(v.clone()))?;
        let slice = backward_slice(p, &Criterion::new(at, [v.as_str()]))?;
        slices.insert(
            v.clone(),
            VarSlice {
                at,
                labels: slice.labels,
            },
        );
    }
    let mut iter = slices.values();
    let mut intersection = iter.next().expect("nonempty").labels.clone();
    for vs in iter {
        intersection = &intersection & &vs.labels;
    }
    let size = p.labels().len();
    let k = slices.len() as i64;
    let tightness = Rational64::new(intersection.len() as i64, size as i64);
    let coverage = slices
        .values()
        .map(|vs| Rational64::new(vs.labels.len() as i64, size as i64))
        .sum::<Rational64>()
        / Rational64::from_integer(k);
    let overlap = slices
        .values()
        .map(|vs| Rational64::new(intersection.len() as i64, vs.labels.len() as i64))
        .sum::<Rational64>()
        / Rational64::from_integer(k);
    Ok(CohesionReport {
        slices,
        intersection,
        program_size: size,
        tightness,
        coverage,
        overlap,
    })
}
