//! Canonicalization ahead of analysis.
//!
//! Three rewrites, applied everywhere, after which labels are re-assigned
//! consecutively in source order:
//!
//! * chained multi-assignments split into one assignment per target,
//!   right-to-left (`i = pprod = nprod = 1;` becomes `nprod = 1;`
//!   `pprod = 1;` `i = 1;`);
//! * compound assignments and standalone `++`/`--` become plain `=`
//!   (`psum += a` → `psum = psum + a`, `i++` → `i = i + 1`);
//! * an increment embedded in a `for`-header assignment is lifted into its
//!   own header entry (`sum = a[++i]` → `i = i + 1, sum = a[i]`), so that
//!   header assignments are side-effect-free afterwards.
//!
//! The pass is idempotent: normalizing a normalized program is identity.

use super::ast::*;

pub fn normalize(p: &Program) -> Program {
    let body = norm_stmts(&p.body);
    let mut out = Program {
        decls: p.decls.clone(),
        body,
    };
    relabel(&mut out);
    out
}

fn norm_stmts(stmts: &[Stmt]) -> Vec<Stmt> {
    let mut out = Vec::new();
    for s in stmts {
        norm_stmt(s, &mut out);
    }
    out
}

// Labels on the rewritten statements are placeholders; `relabel` assigns
// the real consecutive numbering afterwards.
const TMP: Label = Label(0);

fn norm_stmt(s: &Stmt, out: &mut Vec<Stmt>) {
    match &s.kind {
        StmtKind::MultiAssign { targets, value } => {
            if value.is_pure() {
                // Right-to-left: the last target is assigned first; a pure
                // right-hand side can simply be replicated.
                for t in targets.iter().rev() {
                    out.push(Stmt {
                        label: TMP,
                        kind: StmtKind::Assign(Assign::set(t.clone(), value.clone())),
                    });
                }
            } else {
                // Impure right-hand side: evaluate once, then copy down
                // the chain so the side effect is not duplicated.
                let mut prev = targets.last().unwrap().clone();
                out.push(Stmt {
                    label: TMP,
                    kind: StmtKind::Assign(Assign::set(prev.clone(), value.clone())),
                });
                for t in targets[..targets.len() - 1].iter().rev() {
                    out.push(Stmt {
                        label: TMP,
                        kind: StmtKind::Assign(Assign::set(
                            t.clone(),
                            Expr::LValue(prev.clone()),
                        )),
                    });
                    prev = t.clone();
                }
            }
        }
        StmtKind::Assign(a) => out.push(Stmt {
            label: TMP,
            kind: StmtKind::Assign(plain_assign(a)),
        }),
        StmtKind::Read(lv) => out.push(Stmt {
            label: TMP,
            kind: StmtKind::Read(lv.clone()),
        }),
        StmtKind::Print(e) => out.push(Stmt {
            label: TMP,
            kind: StmtKind::Print(e.clone()),
        }),
        StmtKind::If {
            cond,
            then_branch,
            else_branch,
        } => out.push(Stmt {
            label: TMP,
            kind: StmtKind::If {
                cond: cond.clone(),
                then_branch: norm_stmts(then_branch),
                else_branch: else_branch.as_ref().map(|e| norm_stmts(e)),
            },
        }),
        StmtKind::While { cond, body } => out.push(Stmt {
            label: TMP,
            kind: StmtKind::While {
                cond: cond.clone(),
                body: norm_stmts(body),
            },
        }),
        StmtKind::For {
            init,
            cond,
            update,
            body,
        } => out.push(Stmt {
            label: TMP,
            kind: StmtKind::For {
                init: norm_assign_list(init),
                cond: cond.clone(),
                update: norm_assign_list(update),
                body: norm_stmts(body),
            },
        }),
    }
}

/// `x = x + 1` built from an lvalue.
fn incdec_as_set(target: &LValue, op: IncDecOp) -> Assign {
    let bin = match op {
        IncDecOp::Inc => BinOp::Add,
        IncDecOp::Dec => BinOp::Sub,
    };
    Assign::set(
        target.clone(),
        Expr::Binary(
            bin,
            Box::new(Expr::LValue(target.clone())),
            Box::new(Expr::Int(1)),
        ),
    )
}

fn plain_assign(a: &Assign) -> Assign {
    match a {
        Assign::Set {
            target,
            op: AssignOp::Set,
            value,
        } => Assign::set(target.clone(), value.clone()),
        Assign::Set { target, op, value } => {
            let bin = match op {
                AssignOp::Add => BinOp::Add,
                AssignOp::Sub => BinOp::Sub,
                AssignOp::Mul => BinOp::Mul,
                AssignOp::Div => BinOp::Div,
                AssignOp::Set => unreachable!(),
            };
            Assign::set(
                target.clone(),
                Expr::Binary(
                    bin,
                    Box::new(Expr::LValue(target.clone())),
                    Box::new(value.clone()),
                ),
            )
        }
        Assign::IncDec { target, op, .. } => incdec_as_set(target, *op),
    }
}

/// Normalizes a `for`-header assignment list: compound forms flattened and
/// embedded `++`/`--` lifted out into their own entries.
fn norm_assign_list(list: &[Assign]) -> Vec<Assign> {
    let mut out = Vec::new();
    for a in list {
        let a = plain_assign(a);
        let Assign::Set { target, op, value } = a else {
            unreachable!()
        };
        let mut pre = Vec::new();
        let mut post = Vec::new();
        let value = extract_incdec(&value, &mut pre, &mut post);
        // The target's index expression may also carry increments.
        let target = match target {
            LValue::Elem(name, idx) => {
                let idx = extract_incdec(&idx, &mut pre, &mut post);
                LValue::Elem(name, Box::new(idx))
            }
            t => t,
        };
        out.extend(pre);
        out.push(Assign::Set { target, op, value });
        out.extend(post);
    }
    out
}

/// Replaces `++i` / `i--` subexpressions with plain reads of `i`,
/// accumulating the corresponding `i = i + 1` assignments into `pre`
/// (prefix forms) or `post` (postfix forms).
fn extract_incdec(e: &Expr, pre: &mut Vec<Assign>, post: &mut Vec<Assign>) -> Expr {
    match e {
        Expr::Int(_) => e.clone(),
        Expr::LValue(LValue::Var(_)) => e.clone(),
        Expr::LValue(LValue::Elem(name, idx)) => Expr::LValue(LValue::Elem(
            name.clone(),
            Box::new(extract_incdec(idx, pre, post)),
        )),
        Expr::Unary(op, inner) => {
            Expr::Unary(*op, Box::new(extract_incdec(inner, pre, post)))
        }
        Expr::IncDec { op, prefix, target } => {
            if *prefix {
                pre.push(incdec_as_set(target, *op));
            } else {
                post.push(incdec_as_set(target, *op));
            }
            Expr::LValue(target.clone())
        }
        Expr::Binary(op, l, r) => Expr::Binary(
            *op,
            Box::new(extract_incdec(l, pre, post)),
            Box::new(extract_incdec(r, pre, post)),
        ),
    }
}

/// Re-assigns consecutive labels in source order, declarations first.
pub fn relabel(p: &mut Program) {
    let mut next = 1u32;
    for d in &mut p.decls {
        d.label = Label(next);
        next += 1;
    }
    fn walk(stmts: &mut [Stmt], next: &mut u32) {
        for s in stmts {
            s.label = Label(*next);
            *next += 1;
            match &mut s.kind {
                StmtKind::If {
                    then_branch,
                    else_branch,
                    ..
                } => {
                    walk(then_branch, next);
                    if let Some(e) = else_branch {
                        walk(e, next);
                    }
                }
                StmtKind::While { body, .. } => walk(body, next),
                StmtKind::For { body, .. } => walk(body, next),
                _ => {}
            }
        }
    }
    walk(&mut p.body, &mut next);
}
