//! Amorphous slicing: simplification that may rewrite syntax.
//!
//! A classic slice can only delete whole statements, so its precision is
//! capped by the program's phrasing.  An amorphous slice answers the same
//! question — "what feeds these variables?" — but is allowed to produce
//! *any* smaller program that preserves the criterion variables' final
//! values (and all printed output) of the statement-deletion slice, on
//! runs that complete without a fault.
//!
//! The pipeline first takes the ordinary backward slice, then repeats six
//! rewrite passes until the program stops changing:
//!
//! 1. copy propagation,
//! 2. constant folding,
//! 3. loop final-value replacement (a counted loop's dead recurrence
//!    `v = E(i)` becomes a single `v = E(i_last)` after the loop),
//! 4. dead code elimination rooted at the criterion variables,
//! 5. removal of empty counted loops nobody observes,
//! 6. index normalization (`a[i + 1]` under a shifted counter becomes
//!    `a[i]`).
//!
//! Labels are re-assigned after every pass, so the result is a
//! self-contained program rather than a subset of the original's labels.

mod passes;

use crate::lang::ast::Program;
use crate::lang::normalize::relabel;
use crate::slicer::{backward_slice, Criterion, SliceError};
use std::collections::BTreeSet;

/// Bail-out bound for the rewrite fixpoint; in practice two or three
/// rounds suffice.
const MAX_ROUNDS: u32 = 32;

/// Result of amorphous slicing: a transformed program, not a label set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AmorphousSlice {
    pub criterion: Criterion,
    /// The rewritten program, labeled consecutively from 1.
    pub program: Program,
    /// Number of full pass rounds run, including the final no-change one.
    pub rounds: u32,
}

/// Computes the backward slice for `c`, then shrinks it by rewriting
/// until no pass makes progress.
pub fn amorphous_slice(p: &Program, c: &Criterion) -> Result<AmorphousSlice, SliceError> {
    let sliced = backward_slice(p, c)?;
    let roots: BTreeSet<String> = c.vars.clone();
    let mut prog = sliced.program;
    relabel(&mut prog);
    let mut rounds = 0;
    for _ in 0..MAX_ROUNDS {
        let before = prog.clone();
        for pass in [
            passes::copy_propagate,
            passes::constant_fold,
            passes::loop_final_value,
        ] {
            prog = pass(&prog);
            relabel(&mut prog);
        }
        for pass in [
            passes::dead_code_eliminate,
            passes::empty_loop_removal,
            passes::index_normalize,
        ] {
            prog = pass(&prog, &roots);
            relabel(&mut prog);
        }
        rounds += 1;
        if prog == before {
            break;
        }
    }
    Ok(AmorphousSlice {
        criterion: c.clone(),
        program: prog,
        rounds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamic::{run_seeded, InputSource, DEFAULT_STEP_LIMIT};
    use crate::lang::ast::Label;
    use crate::lang::{normalize, parse, unparse};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeMap;

    fn fixture(name: &str) -> Program {
        let path = format!("{}/../../fixtures/{}.mj", env!("CARGO_MANIFEST_DIR"), name);
        normalize(&parse(&std::fs::read_to_string(path).unwrap()).unwrap())
    }

    #[test]
    fn scan_loop_average_collapses_to_single_division() {
        let p = fixture("fig13");
        let c = Criterion::new(Label(5), ["average"]);
        let a = amorphous_slice(&p, &c).unwrap();
        assert_eq!(
            unparse(&a.program),
            "int a[25], i, sum, biggest, average;\naverage = a[24] / 25;\n"
        );
    }

    #[test]
    fn scan_loop_maximum_keeps_one_normalized_loop() {
        let p = fixture("fig13");
        let c = Criterion::new(Label(4), ["biggest"]);
        let a = amorphous_slice(&p, &c).unwrap();
        let expected = normalize(
            &parse(
                "int a[25], i, sum, biggest, average;\n\
                 for (i = 1, biggest = a[0]; i < 25; i = i + 1) {\n\
                     if (a[i] > biggest) {\n\
                         biggest = a[i];\n\
                     }\n\
                 }",
            )
            .unwrap(),
        );
        assert_eq!(a.program, expected);
    }

    #[test]
    fn rewrites_preserve_final_values_on_random_arrays() {
        let p = fixture("fig13");
        let mut rng = ChaCha8Rng::seed_from_u64(0xA5);
        for (at, var) in [(Label(5), "average"), (Label(4), "biggest")] {
            let c = Criterion::new(at, [var]);
            let plain = backward_slice(&p, &c).unwrap().program;
            let rewritten = amorphous_slice(&p, &c).unwrap().program;
            for _ in 0..50 {
                let cells: Vec<i64> = (0..25).map(|_| rng.gen_range(-100..100)).collect();
                let arrays = BTreeMap::from([("a".to_string(), cells)]);
                let scalars = BTreeMap::new();
                let t0 = run_seeded(
                    &plain,
                    InputSource::Stream(vec![]),
                    DEFAULT_STEP_LIMIT,
                    &scalars,
                    &arrays,
                )
                .unwrap();
                let t1 = run_seeded(
                    &rewritten,
                    InputSource::Stream(vec![]),
                    DEFAULT_STEP_LIMIT,
                    &scalars,
                    &arrays,
                )
                .unwrap();
                assert_eq!(t0.final_scalars[var], t1.final_scalars[var]);
                assert_eq!(t0.outputs, t1.outputs);
            }
        }
    }

    #[test]
    fn straight_line_program_survives_unchanged() {
        let p = normalize(&parse("int x;\nx = 5;\nprint(x);").unwrap());
        let a = amorphous_slice(&p, &Criterion::new(Label(3), ["x"])).unwrap();
        assert_eq!(a.program, p);
    }

    #[test]
    fn copy_chain_collapses_and_dead_middleman_vanishes() {
        let p = normalize(&parse("int x, y, z;\nx = read();\ny = x;\nz = y + 1;\nprint(z);").unwrap());
        let a = amorphous_slice(&p, &Criterion::new(Label(5), ["z"])).unwrap();
        assert_eq!(
            unparse(&a.program),
            "int x, y, z;\nx = read();\nz = x + 1;\nprint(z);\n"
        );
    }

    #[test]
    fn data_dependent_while_loop_is_left_alone() {
        let src = "int n, s, i;\nn = read();\ni = 0;\ns = 0;\n\
                   while (i < n) {\n    s = s + i;\n    i = i + 1;\n}\nprint(s);";
        let p = normalize(&parse(src).unwrap());
        let a = amorphous_slice(&p, &Criterion::new(Label(8), ["s"])).unwrap();
        assert_eq!(a.program, p);
    }

    #[test]
    fn result_is_deterministic_and_rounds_bounded() {
        let p = fixture("fig13");
        let c = Criterion::new(Label(5), ["average"]);
        let a1 = amorphous_slice(&p, &c).unwrap();
        let a2 = amorphous_slice(&p, &c).unwrap();
        assert_eq!(a1.program, a2.program);
        assert_eq!(a1.rounds, a2.rounds);
        assert!(a1.rounds <= MAX_ROUNDS);
    }

    #[test]
    fn unknown_criterion_label_is_rejected() {
        let p = fixture("fig13");
        let err = amorphous_slice(&p, &Criterion::new(Label(99), ["average"])).unwrap_err();
        assert_eq!(err, SliceError::UnknownLabel(Label(99)));
    }
}
