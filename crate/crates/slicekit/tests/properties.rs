//! Cross-cutting property suites: slices replayed against recorded runs,
//! nesting of the slice flavors, dependence analyses checked against
//! from-first-principles oracles, and round-trips through the printer.

mod common;

use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slicekit::amorphous::amorphous_slice;
use slicekit::dependence::{
    build_cfg, build_pdg, control_dependences, control_dependences_by_definition,
    postdominator_sets, postdominators,
};
use slicekit::dynamic::{
    dynamic_slice, run, simultaneous_dynamic_slice, DynCriterion, InputSource, DEFAULT_STEP_LIMIT,
};
use slicekit::lang::ast::Label;
use slicekit::lang::{normalize, parse, project, unparse};
use slicekit::slicer::{backward_slice, forward_slice, Criterion};
use std::collections::BTreeSet;

/// Backward slices of the corpus programs, projected and re-run against the
/// recorded inputs of the original execution, must reproduce the values of
/// the criterion variables at every execution of the criterion statement.
/// Fixture name, criterion label, criterion variables, and the inputs to
/// replay the slice on.
type BehaviorCase = (&'static str, u32, Vec<&'static str>, Vec<Vec<i64>>);

#[test]
fn backward_slices_preserve_observed_behavior_on_fixtures() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0b5e_0000);
    let fig9_inputs: Vec<Vec<i64>> = (0..12)
        .map(|_| (0..5).map(|_| rng.gen_range(-3..=5)).collect())
        .collect();

    let mut cases: Vec<BehaviorCase> = vec![
        ("fig1", 8, vec!["sum"], (-3..=12).map(|n| vec![n]).collect()),
        ("fig1", 9, vec!["product"], (-3..=12).map(|n| vec![n]).collect()),
        ("fig1", 6, vec!["counter", "sum"], (0..=9).map(|n| vec![n]).collect()),
        ("fig3", 9, vec!["sum"], (-2..=8).map(|n| vec![n]).collect()),
        // terminate_var = 0 divides by zero; such runs are skipped, so start
        // the sweep at 1 to keep the checked-run count up.
        ("fig3", 11, vec!["average"], (1..=10).map(|n| vec![n]).collect()),
        ("fig6", 9, vec!["x"], (-2..=8).map(|n| vec![n]).collect()),
        ("fig6", 5, vec!["i"], (0..=6).map(|n| vec![n]).collect()),
        ("fig13", 5, vec!["average"], vec![vec![]]),
        ("fig13", 4, vec!["biggest"], vec![vec![]]),
    ];
    let fig11_inputs: Vec<Vec<i64>> = (-2..=2)
        .flat_map(|n| (-3..=3).map(move |a| vec![n, a]))
        .collect();
    cases.push(("fig11", 14, vec!["sum"], fig11_inputs.clone()));
    cases.push(("fig11", 15, vec!["prod"], fig11_inputs));
    cases.push(("fig9", 35, vec!["sum"], fig9_inputs.clone()));
    cases.push(("fig9", 36, vec!["prod"], fig9_inputs));

    let mut checked = 0u32;
    for (name, at, vars, inputs) in cases {
        let p = fixture(name);
        let at = Label(at);
        let vars: BTreeSet<String> = vars.into_iter().map(String::from).collect();
        let slice = backward_slice(&p, &Criterion { at, vars: vars.clone() })
            .unwrap_or_else(|e| panic!("{name}: {e}"));
        for input in inputs {
            match check_slice_preserves_observations(
                &p,
                &slice.labels,
                at,
                &vars,
                &input,
                DEFAULT_STEP_LIMIT,
            ) {
                Ok(true) => checked += 1,
                Ok(false) => {} // faulting run, out of scope
                Err(msg) => panic!("{name}: {msg}"),
            }
        }
    }
    assert!(checked >= 100, "only {checked} runs were actually checked");
}

/// The same replay guarantee over machine-generated loop-free programs and
/// random criteria drawn from their statements.
#[test]
fn backward_slices_preserve_observed_behavior_on_random_programs() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let mut checked = 0u32;
    for case in 0..60 {
        let p = random_loop_free(&mut rng);
        let labels: Vec<Label> = stmt_labels(&p).into_iter().collect();
        for _ in 0..2 {
            let at = labels[rng.gen_range(0..labels.len())];
            let var = ["a", "b", "c", "d"][rng.gen_range(0..4)];
            let vars: BTreeSet<String> = [var.to_string()].into();
            let slice = backward_slice(&p, &Criterion { at, vars: vars.clone() }).unwrap();
            let input = random_input(&mut rng);
            match check_slice_preserves_observations(
                &p,
                &slice.labels,
                at,
                &vars,
                &input,
                DEFAULT_STEP_LIMIT,
            ) {
                Ok(true) => checked += 1,
                Ok(false) => panic!("case {case}: loop-free program faulted\n{}", unparse(&p)),
                Err(msg) => panic!("case {case}: {msg}\n{}", unparse(&p)),
            }
        }
    }
    assert_eq!(checked, 120);
}

/// For any one input, the dynamic slice is contained in the simultaneous
/// slice over a set including that input, which in turn refines the static
/// backward slice at the same criterion.
#[test]
fn dynamic_simultaneous_and_static_slices_nest() {
    let cases: Vec<(&str, u32, &str, Vec<Vec<i64>>)> = vec![
        ("fig1", 8, "sum", vec![vec![0], vec![3], vec![7]]),
        ("fig6", 9, "x", vec![vec![0], vec![1], vec![2], vec![3], vec![5]]),
        (
            "fig9",
            35,
            "sum",
            vec![vec![0, 0, 2, 2, 0], vec![0, 1, 2, 2, 0], vec![1, 0, 1, 0, 1]],
        ),
    ];
    for (name, at, var, inputs) in cases {
        let p = fixture(name);
        let at = Label(at);
        let vars: BTreeSet<String> = [var.to_string()].into();
        let stat = backward_slice(&p, &Criterion { at, vars: vars.clone() }).unwrap();
        let simu =
            simultaneous_dynamic_slice(&p, at, &vars, &inputs, DEFAULT_STEP_LIMIT).unwrap();
        assert!(
            simu.labels.is_subset(&stat.labels),
            "{name}: simultaneous slice {:?} escapes static slice {:?}",
            simu.labels,
            stat.labels
        );
        for input in &inputs {
            let c = DynCriterion { at, occurrence: 1, vars: vars.clone() };
            let dynamic = dynamic_slice(&p, &c, input, DEFAULT_STEP_LIMIT).unwrap();
            assert!(
                dynamic.labels.is_subset(&simu.labels),
                "{name} on {input:?}: dynamic slice {:?} escapes simultaneous slice {:?}",
                dynamic.labels,
                simu.labels
            );
        }
    }
}

/// The dominance-frontier-style control-dependence construction agrees with
/// the quadratic definition-chasing one on the corpus and on random
/// programs.
#[test]
fn control_dependence_algorithms_agree() {
    for name in FIXTURES {
        let cfg = build_cfg(&fixture(name));
        assert_eq!(
            control_dependences(&cfg),
            control_dependences_by_definition(&cfg),
            "{name}"
        );
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    for case in 0..50 {
        let p = random_loop_free(&mut rng);
        let cfg = build_cfg(&p);
        assert_eq!(
            control_dependences(&cfg),
            control_dependences_by_definition(&cfg),
            "case {case}:\n{}",
            unparse(&p)
        );
    }
}

/// The immediate-postdominator tree encodes exactly the relation computed
/// by the set-based dataflow equations.
#[test]
fn postdominator_tree_matches_set_semantics() {
    let mut programs: Vec<_> = FIXTURES.iter().map(|n| fixture(n)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0003);
    programs.extend((0..25).map(|_| random_loop_free(&mut rng)));
    for p in &programs {
        let cfg = build_cfg(p);
        let tree = postdominators(&cfg);
        let sets = postdominator_sets(&cfg);
        for &a in &cfg.nodes {
            for &b in &cfg.nodes {
                assert_eq!(
                    tree.postdominates(a, b),
                    sets[&b].contains(&a),
                    "disagree on {a:?} postdominating {b:?} in\n{}",
                    unparse(p)
                );
            }
        }
    }
}

/// PDG data edges of loop-free programs equal the edges found by walking
/// every control-flow path and tracking visible definitions directly.
#[test]
fn data_edges_match_path_enumeration_on_loop_free_programs() {
    let fig11 = fixture("fig11");
    assert_eq!(build_pdg(&fig11).data, data_edges_by_paths(&fig11), "fig11");
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0004);
    for case in 0..50 {
        let p = random_loop_free(&mut rng);
        assert_eq!(
            build_pdg(&p).data,
            data_edges_by_paths(&p),
            "case {case}:\n{}",
            unparse(&p)
        );
    }
}

/// Membership duality of the closures a slicer walks: `b` is reached
/// forward from `a` exactly when `a` is reached backward from `b`.
#[test]
fn forward_and_backward_closures_are_dual() {
    for name in FIXTURES {
        let p = fixture(name);
        let pdg = build_pdg(&p);
        let labels: Vec<Label> = stmt_labels(&p).into_iter().collect();
        for &a in &labels {
            let fwd = pdg.forward_closure(&[a].into());
            for &b in &labels {
                let bwd = pdg.backward_closure(&[b].into());
                assert_eq!(
                    fwd.contains(&b),
                    bwd.contains(&a),
                    "{name}: duality broken for a={a}, b={b}"
                );
            }
        }
    }
}

/// The same duality through the public slicer API: statement `b` is in the
/// impact set of `a` exactly when `a` is in the backward slice of `b`
/// (empty variable sets anchor each slice at the statement itself).
#[test]
fn forward_slices_invert_backward_membership() {
    for name in FIXTURES {
        let p = fixture(name);
        let labels: Vec<Label> = stmt_labels(&p).into_iter().collect();
        for &a in &labels {
            let fwd = forward_slice(&p, &Criterion { at: a, vars: BTreeSet::new() }).unwrap();
            for &b in &labels {
                let bwd = backward_slice(&p, &Criterion { at: b, vars: BTreeSet::new() }).unwrap();
                assert_eq!(
                    fwd.labels.contains(&b),
                    bwd.labels.contains(&a),
                    "{name}: a={a}, b={b}"
                );
            }
        }
    }
}

/// Amorphous slicing may rewrite statements, but on read-free programs the
/// rewritten program must print what the statement-deletion slice prints
/// and leave the criterion variable with the same final value.
#[test]
fn amorphous_rewrites_preserve_slice_behavior_on_read_free_programs() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0005);
    for case in 0..40 {
        let p = random_read_free(&mut rng);
        let labels: Vec<Label> = stmt_labels(&p).into_iter().collect();
        let at = labels[rng.gen_range(0..labels.len())];
        let var = ["a", "b", "c", "d"][rng.gen_range(0..4)];
        let c = Criterion::new(at, [var]);
        let plain = backward_slice(&p, &c).unwrap();
        let projected = project(&p, &plain.labels).unwrap();
        let rewritten = amorphous_slice(&p, &c).unwrap();
        let want = run(&projected, InputSource::Stream(vec![]), DEFAULT_STEP_LIMIT).unwrap();
        let got = run(&rewritten.program, InputSource::Stream(vec![]), DEFAULT_STEP_LIMIT).unwrap();
        assert_eq!(
            want.outputs,
            got.outputs,
            "case {case}: outputs diverge\noriginal:\n{}\nrewritten:\n{}",
            unparse(&p),
            unparse(&rewritten.program)
        );
        assert_eq!(
            want.final_scalars.get(var),
            got.final_scalars.get(var),
            "case {case}: final `{var}` diverges\noriginal:\n{}\nrewritten:\n{}",
            unparse(&p),
            unparse(&rewritten.program)
        );
    }
}

proptest! {
    /// Printing a normalized program and reading it back is the identity.
    #[test]
    fn unparse_parse_round_trips(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_loop_free(&mut rng);
        let back = normalize(&parse(&unparse(&p)).expect("printer output parses"));
        prop_assert_eq!(&back, &p);
    }

    /// Slices never invent labels, always retain the criterion line and
    /// the declarations, and project onto a consecutively relabeled
    /// program whose label map covers exactly the slice, in order.
    #[test]
    fn slices_are_well_formed_projections(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_loop_free(&mut rng);
        let labels: Vec<Label> = stmt_labels(&p).into_iter().collect();
        let at = labels[rng.gen_range(0..labels.len())];
        let var = ["a", "b", "c", "d"][rng.gen_range(0..4)];
        let slice = backward_slice(&p, &Criterion::new(at, [var])).unwrap();
        prop_assert!(slice.labels.contains(&at));
        let all = p.labels();
        prop_assert!(slice.labels.iter().all(|l| all.contains(l)));
        for d in p.decl_labels() {
            prop_assert!(slice.labels.contains(&d));
        }
        let (reproj, map) = slicekit::lang::project_with_map(&p, &slice.labels).unwrap();
        prop_assert_eq!(&reproj, &slice.program);
        // Backward slices are already structurally closed (control
        // dependence pulls in every enclosing predicate), so the map's
        // domain is exactly the slice and it renumbers monotonically.
        let keys: Vec<Label> = map.keys().copied().collect();
        let slice_sorted: Vec<Label> = slice.labels.iter().copied().collect();
        prop_assert_eq!(keys, slice_sorted);
        let consecutive: Vec<Label> = (1..=map.len() as u32).map(Label).collect();
        let vals: Vec<Label> = map.values().copied().collect();
        prop_assert_eq!(vals, &consecutive[..]);
        let fresh: Vec<Label> = slice.program.labels();
        prop_assert_eq!(fresh, consecutive);
    }
}

