//! slicekit: program slicing for MiniJ, a small integer-only imperative
//! language.
//!
//! The crate builds control-flow and program-dependence graphs for MiniJ
//! programs and derives several slice flavors on top of them:
//!
//! * [`slicer`] — static backward and forward slicing over the PDG;
//! * [`dynamic`] — an instrumenting interpreter with execution traces,
//!   single-trace dynamic slicing, and simultaneous dynamic slicing over
//!   several inputs at once;
//! * [`conditioned`] — quasi-static slicing: fix chosen variables to
//!   constants, prune branches that can no longer run, then slice;
//! * [`amorphous`] — semantics-preserving transformation passes that
//!   shrink a slice beyond statement deletion;
//! * [`cohesion`] — slice-overlap cohesion metrics (tightness, coverage,
//!   overlap) computed with exact rational arithmetic.
//!
//! Programs enter through [`lang::parse`] and are canonicalized by
//! [`lang::normalize`]; every analysis expects the normalized form, whose
//! labels are what criteria and results refer to.

pub mod amorphous;
pub mod cohesion;
pub mod conditioned;
pub mod dependence;
pub mod dynamic;
pub mod lang;
pub mod slicer;
