//! Shared helpers for the integration suites: fixture loading, an
//! execution-observation oracle, slice replay over recorded inputs, a
//! random generator for small loop-free programs, and a path-enumeration
//! oracle for data-dependence edges.
//!
//! Everything here is deliberately independent of the library's slicing
//! internals: observations are folded directly out of trace events, and
//! the data-edge oracle enumerates control-flow paths instead of running
//! a dataflow analysis, so the two sides can disagree when one is wrong.

#![allow(dead_code)] // each test binary uses a subset of the helpers

use rand::Rng;
use slicekit::dependence::{build_cfg, CfgNode};
use slicekit::dynamic::{run, run_seeded, InputSource, MemKey, Trace};
use slicekit::lang::ast::{Label, Program, Shape};
use slicekit::lang::{normalize, parse, project_with_map};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::PathBuf;

pub const FIXTURES: [&str; 6] = ["fig1", "fig3", "fig6", "fig9", "fig11", "fig13"];

/// Parse and normalize a program from the repository's `fixtures/` corpus.
pub fn fixture(name: &str) -> Program {
    let mut path = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    path.pop(); // crates/
    path.pop(); // repo root
    path.push("fixtures");
    path.push(format!("{name}.mj"));
    let text = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("reading {}: {e}", path.display()));
    normalize(&parse(&text).unwrap_or_else(|e| panic!("parsing {name}: {e}")))
}

/// Labels of a program's non-declaration statements.
pub fn stmt_labels(p: &Program) -> BTreeSet<Label> {
    let decls = p.decl_labels();
    p.labels().into_iter().filter(|l| !decls.contains(l)).collect()
}

/// The memory cells a variable occupies: one `(name, None)` cell for a
/// scalar, one `(name, Some(i))` cell per element for an array.
pub fn cells_of(p: &Program, var: &str) -> Vec<MemKey> {
    for d in &p.decls {
        for item in &d.items {
            if item.name == var {
                return match item.shape {
                    Shape::Scalar => vec![(var.to_string(), None)],
                    Shape::Array(n) => {
                        (0..i64::from(n)).map(|i| (var.to_string(), Some(i))).collect()
                    }
                };
            }
        }
    }
    panic!("cells_of: `{var}` is not declared");
}

/// Observation oracle: the values the criterion variables hold on entry to
/// each execution of the statement labeled `at`, in execution order.  One
/// inner vector per occurrence, holding the cells of `vars` (sorted by
/// name, then element index).  Computed by folding the trace's writes, so
/// it does not depend on any dependence analysis.
pub fn observations(
    p: &Program,
    trace: &Trace,
    at: Label,
    vars: &BTreeSet<String>,
) -> Vec<Vec<i64>> {
    let cells: Vec<MemKey> = vars.iter().flat_map(|v| cells_of(p, v)).collect();
    let mut mem: BTreeMap<MemKey, i64> = BTreeMap::new();
    let mut out = Vec::new();
    for e in &trace.events {
        if e.occ.label == at {
            out.push(cells.iter().map(|c| mem.get(c).copied().unwrap_or(0)).collect());
        }
        for (cell, val) in &e.defines {
            mem.insert(cell.clone(), *val);
        }
    }
    out
}

/// Project `p` onto `keep` and re-run it, feeding every surviving read
/// statement exactly the values it consumed in `trace`.  Returns the
/// replay trace and the old-label → new-label map.
pub fn replay_on_labels(
    p: &Program,
    trace: &Trace,
    keep: &BTreeSet<Label>,
    step_limit: u64,
) -> Result<(Trace, BTreeMap<Label, Label>), String> {
    let (proj, map) = project_with_map(p, keep).map_err(|e| e.to_string())?;
    let mut channels: BTreeMap<Label, Vec<i64>> = BTreeMap::new();
    for (old, vals) in &trace.reads_by_label {
        if let Some(new) = map.get(old) {
            channels.insert(*new, vals.clone());
        }
    }
    let replay = run(&proj, InputSource::Channels(channels), step_limit)
        .map_err(|e| e.to_string())?;
    Ok((replay, map))
}

/// Soundness check for a statement-deletion slice: on the run of `p` over
/// `input`, the sequence of criterion-variable values observed at `at`
/// must be reproduced exactly by the projected program when it replays
/// the recorded reads.  Runs that fault or exhaust the step budget are
/// skipped (the guarantee only covers fault-free terminating runs).
///
/// Returns `Err` with a description when the slice misbehaves, `Ok(true)`
/// when the observations match, and `Ok(false)` for a skipped run.
pub fn check_slice_preserves_observations(
    p: &Program,
    slice_labels: &BTreeSet<Label>,
    at: Label,
    vars: &BTreeSet<String>,
    input: &[i64],
    step_limit: u64,
) -> Result<bool, String> {
    check_slice_preserves_observations_seeded(
        p,
        slice_labels,
        at,
        vars,
        input,
        &BTreeMap::new(),
        step_limit,
    )
}

/// As [`check_slice_preserves_observations`], with the same initial array
/// contents preloaded into both the original program and its slice.
pub fn check_slice_preserves_observations_seeded(
    p: &Program,
    slice_labels: &BTreeSet<Label>,
    at: Label,
    vars: &BTreeSet<String>,
    input: &[i64],
    array_seed: &BTreeMap<String, Vec<i64>>,
    step_limit: u64,
) -> Result<bool, String> {
    let no_scalars = BTreeMap::new();
    let original = match run_seeded(
        p,
        InputSource::Stream(input.to_vec()),
        step_limit,
        &no_scalars,
        array_seed,
    ) {
        Ok(t) => t,
        // Out-of-input reads are not faults: they return 0 and that 0 is
        // recorded per label, so channel replay stays exact.
        Err(_) => return Ok(false),
    };
    let (proj, map) = project_with_map(p, slice_labels).map_err(|e| e.to_string())?;
    let mut channels: BTreeMap<Label, Vec<i64>> = BTreeMap::new();
    for (old, vals) in &original.reads_by_label {
        if let Some(new) = map.get(old) {
            channels.insert(*new, vals.clone());
        }
    }
    let replay = run_seeded(
        &proj,
        InputSource::Channels(channels),
        step_limit,
        &no_scalars,
        array_seed,
    )
    .map_err(|e| format!("slice failed to replay: {e}"))?;
    let new_at = *map
        .get(&at)
        .ok_or_else(|| format!("criterion label {at} missing from slice"))?;
    let want = observations(p, &original, at, vars);
    let got = observations(&proj, &replay, new_at, vars);
    if want != got {
        return Err(format!(
            "observations diverge at {at} over {vars:?} on input {input:?}:\n  original: {want:?}\n  slice:    {got:?}"
        ));
    }
    Ok(true)
}

// ---------------------------------------------------------------------------
// Random loop-free programs
// ---------------------------------------------------------------------------

const GEN_VARS: [&str; 4] = ["a", "b", "c", "d"];

fn gen_var(rng: &mut impl Rng) -> &'static str {
    GEN_VARS[rng.gen_range(0..GEN_VARS.len())]
}

fn gen_expr(rng: &mut impl Rng, depth: u32) -> String {
    // Division and modulus are left out so generated programs cannot fault.
    match rng.gen_range(0..8) {
        0 | 1 => rng.gen_range(0..=9).to_string(),
        2 => format!("-{}", rng.gen_range(1..=9)),
        3..=5 => gen_var(rng).to_string(),
        _ if depth >= 2 => gen_var(rng).to_string(),
        _ => {
            let op = ["+", "-", "*"][rng.gen_range(0..3)];
            format!("({} {} {})", gen_expr(rng, depth + 1), op, gen_expr(rng, depth + 1))
        }
    }
}

fn gen_cond(rng: &mut impl Rng) -> String {
    let op = ["<", "<=", ">", ">=", "==", "!="][rng.gen_range(0..6)];
    format!("{} {} {}", gen_expr(rng, 1), op, gen_expr(rng, 1))
}

fn gen_stmt(rng: &mut impl Rng, out: &mut String, depth: usize, reads: &mut u32) {
    let indent = "    ".repeat(depth);
    let choice = rng.gen_range(0..10);
    if choice < 4 || depth >= 2 {
        writeln!(out, "{indent}{} = {};", gen_var(rng), gen_expr(rng, 0)).unwrap();
    } else if choice < 6 && *reads > 0 {
        *reads -= 1;
        writeln!(out, "{indent}{} = read();", gen_var(rng)).unwrap();
    } else if choice < 8 {
        writeln!(out, "{indent}print({});", gen_expr(rng, 0)).unwrap();
    } else {
        writeln!(out, "{indent}if ({}) {{", gen_cond(rng)).unwrap();
        for _ in 0..rng.gen_range(1..=2) {
            gen_stmt(rng, out, depth + 1, reads);
        }
        if rng.gen_bool(0.5) {
            writeln!(out, "{indent}}} else {{").unwrap();
            for _ in 0..rng.gen_range(1..=2) {
                gen_stmt(rng, out, depth + 1, reads);
            }
        }
        writeln!(out, "{indent}}}").unwrap();
    }
}

fn random_program(rng: &mut impl Rng, read_budget: u32) -> Program {
    let mut src = String::from("int a, b, c, d;\n");
    let mut reads = read_budget;
    for _ in 0..rng.gen_range(3..=8) {
        gen_stmt(rng, &mut src, 0, &mut reads);
    }
    normalize(&parse(&src).unwrap_or_else(|e| panic!("generated source failed to parse: {e}\n{src}")))
}

/// A small random program over scalars `a..d` with straight-line code,
/// `if`/`else`, reads (at most three), and prints — but no loops, so every
/// run terminates and control-flow paths can be enumerated.
pub fn random_loop_free(rng: &mut impl Rng) -> Program {
    random_program(rng, 3)
}

/// Like [`random_loop_free`] but without read statements, so a run's
/// behavior is fixed by the program text alone.
pub fn random_read_free(rng: &mut impl Rng) -> Program {
    random_program(rng, 0)
}

/// Random input vector long enough for any program the generator emits.
pub fn random_input(rng: &mut impl Rng) -> Vec<i64> {
    (0..3).map(|_| rng.gen_range(-9..=9)).collect()
}

// ---------------------------------------------------------------------------
// Path-enumeration oracle for data-dependence edges
// ---------------------------------------------------------------------------

/// All data edges `(def label, use label, var)` found by enumerating every
/// `Entry → Exit` control-flow path of a loop-free program and tracking,
/// per path, which definitions are still visible: a full overwrite of a
/// variable replaces the visible set, a partial one (array element) joins
/// it.  For acyclic control flow this is the reaching-definitions relation
/// computed from first principles.
pub fn data_edges_by_paths(p: &Program) -> BTreeSet<(Label, Label, String)> {
    let cfg = build_cfg(p);
    let mut edges = BTreeSet::new();
    let mut visible: BTreeMap<String, BTreeSet<CfgNode>> = BTreeMap::new();
    walk(&cfg, CfgNode::Entry, &mut visible, &mut edges);
    edges
}

fn walk(
    cfg: &slicekit::dependence::Cfg,
    node: CfgNode,
    visible: &mut BTreeMap<String, BTreeSet<CfgNode>>,
    edges: &mut BTreeSet<(Label, Label, String)>,
) {
    let facts = cfg.facts_of(node);
    if let Some(use_label) = node.label() {
        for v in &facts.uses {
            for d in visible.get(v).into_iter().flatten() {
                if let Some(def_label) = d.label() {
                    edges.insert((def_label, use_label, v.clone()));
                }
            }
        }
    }
    let saved: Vec<(String, Option<BTreeSet<CfgNode>>)> = facts
        .defs
        .iter()
        .map(|v| (v.clone(), visible.get(v).cloned()))
        .collect();
    for v in &facts.defs {
        let entry = visible.entry(v.clone()).or_default();
        if facts.strong_defs.contains(v) {
            entry.clear();
        }
        entry.insert(node);
    }
    for &(succ, _) in cfg.succs_of(node) {
        walk(cfg, succ, visible, edges);
    }
    for (v, old) in saved {
        match old {
            Some(set) => visible.insert(v, set),
            None => visible.remove(&v),
        };
    }
}
