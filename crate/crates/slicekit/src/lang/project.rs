//! Restriction of a program to a set of labels.
//!
//! `project` deletes every labeled statement outside the keep set while
//! preserving block structure: a kept statement keeps its enclosing
//! `if`/`while`/`for` spine alive even when the predicate itself was not
//! requested, and declarations are always retained.  The result is
//! relabeled consecutively; the returned map records where each surviving
//! original label ended up.

use super::ast::*;
use super::normalize::relabel;
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ProjectError {
    #[error("unknown label {0} in projection request")]
    UnknownLabel(Label),
}

/// Keeps exactly the statements in `keep` (plus declarations and any
/// enclosing predicates needed for structure) and drops the rest.
pub fn project(p: &Program, keep: &BTreeSet<Label>) -> Result<Program, ProjectError> {
    Ok(project_with_map(p, keep)?.0)
}

/// As [`project`], also returning the old-label → new-label map of the
/// surviving statements (declarations included).
pub fn project_with_map(
    p: &Program,
    keep: &BTreeSet<Label>,
) -> Result<(Program, BTreeMap<Label, Label>), ProjectError> {
    for l in keep {
        if !p.has_label(*l) {
            return Err(ProjectError::UnknownLabel(*l));
        }
    }
    let keep = close_over_structure(p, keep);
    let body = keep_stmts(&p.body, &keep);
    let mut out = Program {
        decls: p.decls.clone(),
        body,
    };
    // Record, in source order, which original labels survive, then map
    // them onto the fresh numbering.
    let mut survivors: Vec<Label> = p.decls.iter().map(|d| d.label).collect();
    collect_surviving(&p.body, &keep, &mut survivors);
    relabel(&mut out);
    let fresh = out.labels();
    debug_assert_eq!(survivors.len(), fresh.len());
    let map = survivors.into_iter().zip(fresh).collect();
    Ok((out, map))
}

/// Adds every enclosing predicate of a kept statement, so the projected
/// text keeps its shape.  (Backward slices are already closed this way;
/// forward slices and ad-hoc sets may not be.)
fn close_over_structure(p: &Program, keep: &BTreeSet<Label>) -> BTreeSet<Label> {
    let mut closed: BTreeSet<Label> = keep.clone();
    fn walk(stmts: &[Stmt], ancestors: &mut Vec<Label>, closed: &mut BTreeSet<Label>) {
        for s in stmts {
            if closed.contains(&s.label) {
                closed.extend(ancestors.iter().copied());
            }
            match &s.kind {
                StmtKind::If {
                    then_branch,
                    else_branch,
                    ..
                } => {
                    ancestors.push(s.label);
                    walk(then_branch, ancestors, closed);
                    if let Some(e) = else_branch {
                        walk(e, ancestors, closed);
                    }
                    ancestors.pop();
                }
                StmtKind::While { body, .. } | StmtKind::For { body, .. } => {
                    ancestors.push(s.label);
                    walk(body, ancestors, closed);
                    ancestors.pop();
                }
                _ => {}
            }
        }
    }
    walk(&p.body, &mut Vec::new(), &mut closed);
    closed
}

fn keep_stmts(stmts: &[Stmt], keep: &BTreeSet<Label>) -> Vec<Stmt> {
    let mut out = Vec::new();
    for s in stmts {
        if !keep.contains(&s.label) {
            continue;
        }
        let kind = match &s.kind {
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                let then_branch = keep_stmts(then_branch, keep);
                let else_branch = else_branch
                    .as_ref()
                    .map(|e| keep_stmts(e, keep))
                    .filter(|e| !e.is_empty());
                StmtKind::If {
                    cond: cond.clone(),
                    then_branch,
                    else_branch,
                }
            }
            StmtKind::While { cond, body } => StmtKind::While {
                cond: cond.clone(),
                body: keep_stmts(body, keep),
            },
            StmtKind::For {
                init,
                cond,
                update,
                body,
            } => StmtKind::For {
                init: init.clone(),
                cond: cond.clone(),
                update: update.clone(),
                body: keep_stmts(body, keep),
            },
            other => other.clone(),
        };
        out.push(Stmt {
            label: s.label,
            kind,
        });
    }
    out
}

fn collect_surviving(stmts: &[Stmt], keep: &BTreeSet<Label>, out: &mut Vec<Label>) {
    for s in stmts {
        if !keep.contains(&s.label) {
            continue;
        }
        out.push(s.label);
        match &s.kind {
            StmtKind::If {
                then_branch,
                else_branch,
                ..
            } => {
                collect_surviving(then_branch, keep, out);
                if let Some(e) = else_branch {
                    collect_surviving(e, keep, out);
                }
            }
            StmtKind::While { body, .. } | StmtKind::For { body, .. } => {
                collect_surviving(body, keep, out)
            }
            _ => {}
        }
    }
}
