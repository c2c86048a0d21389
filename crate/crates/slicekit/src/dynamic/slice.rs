//! Dynamic slicing over execution traces.
//!
//! A dynamic slice keeps only the statements whose execution actually
//! contributed to the criterion variables' values at one specific
//! occurrence of the criterion statement, for one specific input.  A
//! simultaneous slice does the same for a *set* of inputs at once: it
//! unions the per-trace slices, then closes the result until every kept
//! statement's dynamic dependences in every trace are kept too, and
//! finally verifies the sliced program by replaying each recorded input.
//! Replay feeds each surviving read statement its recorded values over a
//! private channel, so reads dropped from the slice cannot shift the
//! input stream.  If any replay disagrees with the original observations
//! the result falls back to the static backward slice.

use super::interp::{run, InputSource, RuntimeError, Trace};
use crate::lang::ast::{Label, Occurrence, Program, Shape};
use crate::lang::{project, project_with_map};
use crate::slicer::{backward_slice, Criterion};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DynamicError {
    #[error("no statement with label {0}")]
    UnknownLabel(Label),
    #[error("variable `{0}` is not declared")]
    UnknownVariable(String),
    #[error("statement {at} executed {reached} times; occurrence {wanted} never happened")]
    OccurrenceNotReached { at: Label, wanted: u32, reached: u32 },
    #[error(transparent)]
    Runtime(#[from] RuntimeError),
}

/// Criterion for a single-trace slice: a statement occurrence and the
/// variables observed there.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DynCriterion {
    pub at: Label,
    pub occurrence: u32,
    pub vars: BTreeSet<String>,
}

impl DynCriterion {
    pub fn new(
        at: Label,
        occurrence: u32,
        vars: impl IntoIterator<Item = impl Into<String>>,
    ) -> Self {
        DynCriterion {
            at,
            occurrence,
            vars: vars.into_iter().map(Into::into).collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DynamicSlice {
    pub criterion: DynCriterion,
    pub labels: BTreeSet<Label>,
    pub program: Program,
    /// What the original run printed.
    pub outputs: Vec<i64>,
    pub exhausted_reads: u64,
}

#[derive(Debug, Clone)]
pub struct SimultaneousSlice {
    pub at: Label,
    pub vars: BTreeSet<String>,
    pub labels: BTreeSet<Label>,
    pub program: Program,
    /// True when replay verification failed and the static backward slice
    /// was returned instead.
    pub fell_back: bool,
}

fn check(p: &Program, at: Label, vars: &BTreeSet<String>) -> Result<(), DynamicError> {
    if !p.has_label(at) {
        return Err(DynamicError::UnknownLabel(at));
    }
    for v in vars {
        if !p.declares(v) {
            return Err(DynamicError::UnknownVariable(v.clone()));
        }
    }
    Ok(())
}

/// All memory cells a variable can occupy: one for a scalar, one per
/// element for an array.
fn cells_of(p: &Program, var: &str) -> Vec<(String, Option<i64>)> {
    match p.shape_of(var) {
        Some(Shape::Scalar) | None => vec![(var.to_string(), None)],
        Some(Shape::Array(n)) => (0..n as i64)
            .map(|i| (var.to_string(), Some(i)))
            .collect(),
    }
}

/// Event indices that last wrote each criterion cell before event `idx`.
fn def_events_before(trace: &Trace, idx: usize, cells: &[(String, Option<i64>)]) -> BTreeSet<usize> {
    let mut last: BTreeMap<&(String, Option<i64>), usize> = BTreeMap::new();
    for (i, e) in trace.events.iter().enumerate().take(idx) {
        for (cell, _) in &e.defines {
            if let Some(c) = cells.iter().find(|c| *c == cell) {
                last.insert(c, i);
            }
        }
    }
    last.into_values().collect()
}

/// Backward closure over dynamic dependence edges.
fn event_closure(trace: &Trace, seeds: BTreeSet<usize>) -> BTreeSet<usize> {
    let mut seen = seeds;
    let mut work: Vec<usize> = seen.iter().copied().collect();
    while let Some(i) = work.pop() {
        let e = &trace.events[i];
        for &d in e.uses_from.iter().chain(e.control_from.iter()) {
            if seen.insert(d) {
                work.push(d);
            }
        }
    }
    seen
}

pub fn dynamic_slice(
    p: &Program,
    c: &DynCriterion,
    input: &[i64],
    step_limit: u64,
) -> Result<DynamicSlice, DynamicError> {
    check(p, c.at, &c.vars)?;
    let trace = run(p, InputSource::Stream(input.to_vec()), step_limit)?;
    let idx = trace
        .event_at(Occurrence {
            label: c.at,
            k: c.occurrence,
        })
        .ok_or(DynamicError::OccurrenceNotReached {
            at: c.at,
            wanted: c.occurrence,
            reached: trace.events_of(c.at).len() as u32,
        })?;
    let mut seeds: BTreeSet<usize> = [idx].into_iter().collect();
    for v in &c.vars {
        seeds.extend(def_events_before(&trace, idx, &cells_of(p, v)));
    }
    let closed = event_closure(&trace, seeds);
    let mut labels: BTreeSet<Label> = closed.iter().map(|&i| trace.events[i].occ.label).collect();
    labels.extend(p.decl_labels());
    let program = project(p, &labels).expect("slice labels come from the trace");
    Ok(DynamicSlice {
        criterion: c.clone(),
        labels,
        program,
        outputs: trace.outputs.clone(),
        exhausted_reads: trace.exhausted_reads,
    })
}

/// Criterion-variable values seen at each execution of `at`, in order.
/// The value "at" an execution is the value on entry to it.
fn observations(
    p: &Program,
    trace: &Trace,
    at: Label,
    vars: &BTreeSet<String>,
) -> Vec<Vec<i64>> {
    let cells: Vec<(String, Option<i64>)> =
        vars.iter().flat_map(|v| cells_of(p, v)).collect();
    trace
        .events_of(at)
        .into_iter()
        .map(|idx| cells.iter().map(|c| trace.value_before(idx, c)).collect())
        .collect()
}

/// Replays every recorded input against the projection of `p` onto
/// `labels` and checks the criterion observations are reproduced.
fn slice_preserves_observations(
    p: &Program,
    labels: &BTreeSet<Label>,
    at: Label,
    vars: &BTreeSet<String>,
    traces: &[Trace],
    step_limit: u64,
) -> bool {
    let Ok((sliced, map)) = project_with_map(p, labels) else {
        return false;
    };
    let Some(&at_new) = map.get(&at) else {
        return false;
    };
    for trace in traces {
        let mut chans: BTreeMap<Label, Vec<i64>> = BTreeMap::new();
        for (old, values) in &trace.reads_by_label {
            if let Some(&new) = map.get(old) {
                chans.insert(new, values.clone());
            }
        }
        let Ok(replay) = run(&sliced, InputSource::Channels(chans), step_limit) else {
            return false;
        };
        if observations(&sliced, &replay, at_new, vars) != observations(p, trace, at, vars) {
            return false;
        }
    }
    true
}

pub fn simultaneous_dynamic_slice(
    p: &Program,
    at: Label,
    vars: &BTreeSet<String>,
    inputs: &[Vec<i64>],
    step_limit: u64,
) -> Result<SimultaneousSlice, DynamicError> {
    check(p, at, vars)?;
    let mut traces = Vec::new();
    for input in inputs {
        traces.push(run(p, InputSource::Stream(input.clone()), step_limit)?);
    }
    let reached = traces.iter().any(|t| !t.events_of(at).is_empty());
    if !reached {
        return Err(DynamicError::OccurrenceNotReached {
            at,
            wanted: 1,
            reached: 0,
        });
    }

    // Union of the single-trace slices at the last occurrence per trace.
    let mut labels: BTreeSet<Label> = BTreeSet::new();
    for trace in &traces {
        let Some(&idx) = trace.events_of(at).last() else {
            continue;
        };
        let mut seeds: BTreeSet<usize> = [idx].into_iter().collect();
        for v in vars {
            seeds.extend(def_events_before(trace, idx, &cells_of(p, v)));
        }
        labels.extend(
            event_closure(trace, seeds)
                .into_iter()
                .map(|i| trace.events[i].occ.label),
        );
    }

    // Close across traces: every execution of a kept statement, in every
    // trace, must have its own dependences kept.
    loop {
        let before = labels.len();
        for trace in &traces {
            let seeds: BTreeSet<usize> = trace
                .events
                .iter()
                .enumerate()
                .filter(|(_, e)| labels.contains(&e.occ.label))
                .map(|(i, _)| i)
                .collect();
            labels.extend(
                event_closure(trace, seeds)
                    .into_iter()
                    .map(|i| trace.events[i].occ.label),
            );
        }
        if labels.len() == before {
            break;
        }
    }
    labels.extend(p.decl_labels());

    if slice_preserves_observations(p, &labels, at, vars, &traces, step_limit) {
        let program = project(p, &labels).expect("labels come from the program");
        Ok(SimultaneousSlice {
            at,
            vars: vars.clone(),
            labels,
            program,
            fell_back: false,
        })
    } else {
        let s = backward_slice(p, &Criterion { at, vars: vars.clone() })
            .expect("criterion already validated");
        Ok(SimultaneousSlice {
            at,
            vars: vars.clone(),
            labels: s.labels,
            program: s.program,
            fell_back: true,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamic::interp::DEFAULT_STEP_LIMIT;
    use crate::lang::{normalize, parse};

    fn fixture(name: &str) -> Program {
        let path = format!("{}/../../fixtures/{}.mj", env!("CARGO_MANIFEST_DIR"), name);
        normalize(&parse(&std::fs::read_to_string(path).unwrap()).unwrap())
    }

    fn labels(ns: &[u32]) -> BTreeSet<Label> {
        ns.iter().map(|&n| Label(n)).collect()
    }

    fn vars(vs: &[&str]) -> BTreeSet<String> {
        vs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn even_iteration_count_drops_the_odd_branch() {
        let p = fixture("fig6");
        let s = dynamic_slice(
            &p,
            &DynCriterion::new(Label(9), 1, ["x"]),
            &[2],
            DEFAULT_STEP_LIMIT,
        )
        .unwrap();
        assert_eq!(s.outputs, vec![17]);
        assert_eq!(s.labels, labels(&[1, 2, 3, 4, 5, 6, 8, 9]));
    }

    #[test]
    fn single_iteration_needs_no_counter_increment() {
        // With n = 1 the printed x comes from the first iteration's else
        // branch; the increment at 8 only feeds the final (false) test,
        // which the criterion value never depended on.
        let p = fixture("fig6");
        let s = dynamic_slice(
            &p,
            &DynCriterion::new(Label(9), 1, ["x"]),
            &[1],
            DEFAULT_STEP_LIMIT,
        )
        .unwrap();
        assert_eq!(s.outputs, vec![18]);
        assert_eq!(s.labels, labels(&[1, 2, 3, 4, 5, 7, 9]));
    }

    #[test]
    fn overwritten_definition_is_not_in_the_slice() {
        let p = normalize(&parse("int x;\nx = 1;\nx = 2;\nprint(x);").unwrap());
        let s = dynamic_slice(
            &p,
            &DynCriterion::new(Label(4), 1, ["x"]),
            &[],
            DEFAULT_STEP_LIMIT,
        )
        .unwrap();
        assert_eq!(s.labels, labels(&[1, 3, 4]));
    }

    #[test]
    fn unrelated_array_element_writes_are_dropped() {
        let p = normalize(
            &parse("int a[4], x;\na[1] = 10;\na[2] = 30;\nx = a[1];\nprint(x);").unwrap(),
        );
        let s = dynamic_slice(
            &p,
            &DynCriterion::new(Label(5), 1, ["x"]),
            &[],
            DEFAULT_STEP_LIMIT,
        )
        .unwrap();
        assert_eq!(s.labels, labels(&[1, 2, 4, 5]));
    }

    #[test]
    fn missing_occurrence_is_reported_with_the_reached_count() {
        let p = fixture("fig6");
        let err = dynamic_slice(
            &p,
            &DynCriterion::new(Label(6), 2, ["x"]),
            &[2],
            DEFAULT_STEP_LIMIT,
        )
        .unwrap_err();
        assert_eq!(
            err,
            DynamicError::OccurrenceNotReached {
                at: Label(6),
                wanted: 2,
                reached: 1
            }
        );
    }

    #[test]
    fn dynamic_slice_is_contained_in_executed_statements_plus_declarations() {
        let p = fixture("fig1");
        for n in [0i64, 1, 3] {
            let trace = run(&p, InputSource::Stream(vec![n]), DEFAULT_STEP_LIMIT).unwrap();
            let mut executed: BTreeSet<Label> =
                trace.events.iter().map(|e| e.occ.label).collect();
            executed.extend(p.decl_labels());
            let s = dynamic_slice(
                &p,
                &DynCriterion::new(Label(8), 1, ["sum"]),
                &[n],
                DEFAULT_STEP_LIMIT,
            )
            .unwrap();
            assert!(s.labels.is_subset(&executed), "n = {n}");
        }
    }

    #[test]
    fn simultaneous_slice_unions_the_branches_both_inputs_took() {
        let p = fixture("fig6");
        let s = simultaneous_dynamic_slice(
            &p,
            Label(9),
            &vars(&["x"]),
            &[vec![1], vec![2]],
            DEFAULT_STEP_LIMIT,
        )
        .unwrap();
        assert!(!s.fell_back);
        assert_eq!(s.labels, labels(&[1, 2, 3, 4, 5, 6, 7, 8, 9]));
    }

    #[test]
    fn simultaneous_slice_for_one_input_matches_and_verifies() {
        let p = fixture("fig6");
        let s = simultaneous_dynamic_slice(
            &p,
            Label(9),
            &vars(&["x"]),
            &[vec![2]],
            DEFAULT_STEP_LIMIT,
        )
        .unwrap();
        assert!(!s.fell_back);
        assert_eq!(s.labels, labels(&[1, 2, 3, 4, 5, 6, 8, 9]));
    }

    #[test]
    fn replay_verification_rejects_an_undersized_label_set() {
        // Dropping the x = 2 overwrite changes what the print observes;
        // the checker must catch it.
        let p = normalize(&parse("int x;\nx = 1;\nx = 2;\nprint(x);").unwrap());
        let trace = run(&p, InputSource::Stream(vec![]), DEFAULT_STEP_LIMIT).unwrap();
        let bad = labels(&[1, 2, 4]);
        assert!(!slice_preserves_observations(
            &p,
            &bad,
            Label(4),
            &vars(&["x"]),
            std::slice::from_ref(&trace),
            DEFAULT_STEP_LIMIT,
        ));
        let good = labels(&[1, 3, 4]);
        assert!(slice_preserves_observations(
            &p,
            &good,
            Label(4),
            &vars(&["x"]),
            &[trace],
            DEFAULT_STEP_LIMIT,
        ));
    }

    #[test]
    fn replay_verification_survives_a_dropped_read() {
        // The first read is irrelevant to y; channel replay must keep
        // feeding the second read its recorded value.
        let p = normalize(&parse("int x, y;\nx = read();\ny = read();\nprint(y);").unwrap());
        let trace = run(&p, InputSource::Stream(vec![7, 9]), DEFAULT_STEP_LIMIT).unwrap();
        let without_first_read = labels(&[1, 3, 4]);
        assert!(slice_preserves_observations(
            &p,
            &without_first_read,
            Label(4),
            &vars(&["y"]),
            &[trace],
            DEFAULT_STEP_LIMIT,
        ));
    }

    #[test]
    fn lattice_dynamic_within_simultaneous_within_static() {
        let p = fixture("fig6");
        let vs = vars(&["x"]);
        for input in [vec![1], vec![2], vec![3], vec![5]] {
            let d = dynamic_slice(
                &p,
                &DynCriterion::new(Label(9), 1, ["x"]),
                &input,
                DEFAULT_STEP_LIMIT,
            )
            .unwrap();
            let sim = simultaneous_dynamic_slice(
                &p,
                Label(9),
                &vs,
                std::slice::from_ref(&input),
                DEFAULT_STEP_LIMIT,
            )
            .unwrap();
            let st = backward_slice(&p, &Criterion::new(Label(9), ["x"])).unwrap();
            assert!(d.labels.is_subset(&sim.labels), "input {input:?}");
            assert!(sim.labels.is_subset(&st.labels), "input {input:?}");
        }
    }
}
