//! The individual rewrite passes behind amorphous slicing.
//!
//! Every pass maps a program to a semantically smaller-or-equal program
//! with respect to the criterion variables (the `roots`): on runs that
//! complete without a fault, the values the roots hold at the end of
//! execution are preserved, and printed output is preserved, but anything
//! else may be rewritten or removed.  Passes are deliberately
//! conservative: when a side condition cannot be established
//! syntactically the statement is left alone.

use crate::lang::ast::*;
use std::collections::BTreeSet;

// ---------------------------------------------------------------------
// small expression/statement query helpers

/// Variable names an expression reads (array names included, and the
/// targets of embedded `++`/`--`, which read before writing).
pub(crate) fn expr_uses(e: &Expr, out: &mut BTreeSet<String>) {
    match e {
        Expr::Int(_) => {}
        Expr::LValue(lv) => lvalue_uses(lv, out),
        Expr::Unary(_, inner) => expr_uses(inner, out),
        Expr::IncDec { target, .. } => lvalue_uses(target, out),
        Expr::Binary(_, l, r) => {
            expr_uses(l, out);
            expr_uses(r, out);
        }
    }
}

fn lvalue_uses(lv: &LValue, out: &mut BTreeSet<String>) {
    match lv {
        LValue::Var(n) => {
            out.insert(n.clone());
        }
        LValue::Elem(n, idx) => {
            out.insert(n.clone());
            expr_uses(idx, out);
        }
    }
}

/// Names an assignment reads: its value, any index expression, and the
/// old target value for compound forms.
fn assign_uses(a: &Assign, out: &mut BTreeSet<String>) {
    match a {
        Assign::Set { target, op, value } => {
            if *op != AssignOp::Set {
                lvalue_uses(target, out);
            }
            if let LValue::Elem(_, idx) = target {
                expr_uses(idx, out);
            }
            expr_uses(value, out);
        }
        Assign::IncDec { target, .. } => lvalue_uses(target, out),
    }
}

/// The variable (or array) an assignment writes.
fn assign_target(a: &Assign) -> &LValue {
    match a {
        Assign::Set { target, .. } | Assign::IncDec { target, .. } => target,
    }
}

fn assign_is_pure(a: &Assign) -> bool {
    match a {
        Assign::Set { target, value, .. } => {
            value.is_pure()
                && match target {
                    LValue::Var(_) => true,
                    LValue::Elem(_, idx) => idx.is_pure(),
                }
        }
        Assign::IncDec { .. } => true,
    }
}

/// Every name possibly written anywhere in a statement list.
pub(crate) fn stmts_defs(stmts: &[Stmt], out: &mut BTreeSet<String>) {
    visit_stmts(stmts, &mut |s| stmt_own_defs(s, out));
}

fn stmt_own_defs(s: &Stmt, out: &mut BTreeSet<String>) {
    let mut add_assign = |a: &Assign| {
        out.insert(assign_target(a).name().to_string());
        collect_incdec_defs_assign(a, out);
    };
    match &s.kind {
        StmtKind::Assign(a) => add_assign(a),
        StmtKind::MultiAssign { targets, value } => {
            for t in targets {
                out.insert(t.name().to_string());
            }
            collect_incdec_defs(value, out);
        }
        StmtKind::Read(lv) => {
            out.insert(lv.name().to_string());
        }
        StmtKind::Print(e) => collect_incdec_defs(e, out),
        StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => {
            collect_incdec_defs(cond, out)
        }
        StmtKind::For { init, cond, update, .. } => {
            for a in init.iter().chain(update) {
                add_assign(a);
            }
            collect_incdec_defs(cond, out);
        }
    }
}

fn collect_incdec_defs(e: &Expr, out: &mut BTreeSet<String>) {
    match e {
        Expr::IncDec { target, .. } => {
            out.insert(target.name().to_string());
            if let LValue::Elem(_, idx) = target {
                collect_incdec_defs(idx, out);
            }
        }
        Expr::Unary(_, inner) => collect_incdec_defs(inner, out),
        Expr::Binary(_, l, r) => {
            collect_incdec_defs(l, out);
            collect_incdec_defs(r, out);
        }
        Expr::LValue(LValue::Elem(_, idx)) => collect_incdec_defs(idx, out),
        _ => {}
    }
}

fn collect_incdec_defs_assign(a: &Assign, out: &mut BTreeSet<String>) {
    match a {
        Assign::Set { target, value, .. } => {
            collect_incdec_defs(value, out);
            if let LValue::Elem(_, idx) = target {
                collect_incdec_defs(idx, out);
            }
        }
        Assign::IncDec { .. } => {}
    }
}

/// Names a single statement reads directly (children not included).
fn stmt_own_uses(s: &Stmt, out: &mut BTreeSet<String>) {
    match &s.kind {
        StmtKind::Assign(a) => assign_uses(a, out),
        StmtKind::MultiAssign { targets, value } => {
            expr_uses(value, out);
            for t in targets {
                if let LValue::Elem(_, idx) = t {
                    expr_uses(idx, out);
                }
            }
        }
        StmtKind::Read(lv) => {
            if let LValue::Elem(_, idx) = lv {
                expr_uses(idx, out);
            }
        }
        StmtKind::Print(e) => expr_uses(e, out),
        StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => expr_uses(cond, out),
        StmtKind::For { init, cond, update, .. } => {
            expr_uses(cond, out);
            for a in init.iter().chain(update) {
                assign_uses(a, out);
            }
        }
    }
}

/// Every name read anywhere in a statement list.
pub(crate) fn stmts_uses(stmts: &[Stmt], out: &mut BTreeSet<String>) {
    visit_stmts(stmts, &mut |s| stmt_own_uses(s, out));
}

// ---------------------------------------------------------------------
// counted-loop recognition

/// A `for` loop of the shape `for (…, i = K0, …; i < K; …, i = i + 1, …)`
/// with no other writes to `i` anywhere in the loop.  Iteration count and
/// the counter's value after the final test follow directly.
pub(crate) struct Counted {
    pub var: String,
    /// Position of the `i = i + 1` entry in the update list.
    pub update_idx: usize,
    pub iterations: i128,
    /// Value of the counter once the test has failed.
    pub final_value: i64,
}

fn is_increment_of(a: &Assign, var: &str) -> bool {
    matches!(a,
        Assign::Set { target: LValue::Var(n), op: AssignOp::Set, value } if n == var
            && matches!(value,
                Expr::Binary(BinOp::Add, l, r)
                    if matches!(l.as_ref(), Expr::LValue(LValue::Var(m)) if m == var)
                        && matches!(r.as_ref(), Expr::Int(1))))
}

pub(crate) fn recognize_counted(
    init: &[Assign],
    cond: &Expr,
    update: &[Assign],
    body: &[Stmt],
) -> Option<Counted> {
    let (var, bound, inclusive) = match cond {
        Expr::Binary(op @ (BinOp::Lt | BinOp::Le), l, r) => match (l.as_ref(), r.as_ref()) {
            (Expr::LValue(LValue::Var(v)), Expr::Int(k)) => (v.clone(), *k, *op == BinOp::Le),
            _ => return None,
        },
        _ => return None,
    };
    let update_idx = update.iter().position(|a| is_increment_of(a, &var))?;
    // The increment must be the counter's only write inside the loop.
    let mut writes = BTreeSet::new();
    stmts_defs(body, &mut writes);
    for (i, a) in update.iter().enumerate() {
        if i != update_idx {
            writes.insert(assign_target(a).name().to_string());
            collect_incdec_defs_assign(a, &mut writes);
        }
    }
    if writes.contains(&var) {
        return None;
    }
    // The last init entry writing the counter must set it to a constant.
    let k0 = init.iter().rev().find_map(|a| match a {
        Assign::Set { target: LValue::Var(n), op: AssignOp::Set, value: Expr::Int(k) }
            if *n == var => Some(*k),
        _ => None,
    })?;
    if init
        .iter()
        .any(|a| assign_target(a).name() == var && !matches!(a, Assign::Set { value: Expr::Int(_), op: AssignOp::Set, .. }))
    {
        return None;
    }
    let last = bound as i128 + if inclusive { 1 } else { 0 };
    let iterations = (last - k0 as i128).max(0);
    let final_value = i64::try_from((k0 as i128) + iterations).ok()?;
    Some(Counted {
        var,
        update_idx,
        iterations,
        final_value,
    })
}

// ---------------------------------------------------------------------
// copy propagation

type Copies = std::collections::BTreeMap<String, Expr>;

/// A propagatable source: another variable, or an array element with a
/// constant index.  Never a literal — folding constants into uses is
/// constant propagation's job, not renaming's.
fn is_copy_source(e: &Expr) -> bool {
    match e {
        Expr::LValue(LValue::Var(_)) => true,
        Expr::LValue(LValue::Elem(_, idx)) => matches!(idx.as_ref(), Expr::Int(_)),
        _ => false,
    }
}

fn subst_copies(e: &Expr, copies: &Copies) -> Expr {
    match e {
        Expr::Int(_) => e.clone(),
        Expr::LValue(LValue::Var(n)) => copies.get(n).cloned().unwrap_or_else(|| e.clone()),
        Expr::LValue(LValue::Elem(n, idx)) => Expr::LValue(LValue::Elem(
            n.clone(),
            Box::new(subst_copies(idx, copies)),
        )),
        Expr::Unary(op, inner) => Expr::Unary(*op, Box::new(subst_copies(inner, copies))),
        // An embedded increment's target must stay a plain lvalue.
        Expr::IncDec { .. } => e.clone(),
        Expr::Binary(op, l, r) => Expr::Binary(
            *op,
            Box::new(subst_copies(l, copies)),
            Box::new(subst_copies(r, copies)),
        ),
    }
}

fn invalidate(copies: &mut Copies, name: &str) {
    copies.remove(name);
    copies.retain(|_, src| {
        let mut u = BTreeSet::new();
        expr_uses(src, &mut u);
        !u.contains(name)
    });
}

fn invalidate_defs_of(stmts: &[Stmt], copies: &mut Copies) {
    let mut defs = BTreeSet::new();
    stmts_defs(stmts, &mut defs);
    for d in &defs {
        invalidate(copies, d);
    }
}

fn prop_assign(a: &Assign, copies: &mut Copies) -> Assign {
    match a {
        Assign::Set { target, op, value } => {
            let value = subst_copies(value, copies);
            let target = match target {
                LValue::Var(n) => LValue::Var(n.clone()),
                LValue::Elem(n, idx) => {
                    LValue::Elem(n.clone(), Box::new(subst_copies(idx, copies)))
                }
            };
            let mut written = BTreeSet::new();
            collect_incdec_defs(&value, &mut written);
            written.insert(target.name().to_string());
            for w in &written {
                invalidate(copies, w);
            }
            if let LValue::Var(x) = &target {
                let mut src_uses = BTreeSet::new();
                expr_uses(&value, &mut src_uses);
                if *op == AssignOp::Set && is_copy_source(&value) && !src_uses.contains(x) {
                    copies.insert(x.clone(), value.clone());
                }
            }
            Assign::Set {
                target,
                op: *op,
                value,
            }
        }
        Assign::IncDec { target, op, prefix } => {
            let target = match target {
                LValue::Var(n) => {
                    invalidate(copies, n);
                    LValue::Var(n.clone())
                }
                LValue::Elem(n, idx) => {
                    let idx = subst_copies(idx, copies);
                    invalidate(copies, n);
                    LValue::Elem(n.clone(), Box::new(idx))
                }
            };
            Assign::IncDec {
                target,
                op: *op,
                prefix: *prefix,
            }
        }
    }
}

fn prop_block(stmts: &[Stmt], copies: &mut Copies) -> Vec<Stmt> {
    let mut out = Vec::with_capacity(stmts.len());
    for s in stmts {
        let kind = match &s.kind {
            StmtKind::Assign(a) => StmtKind::Assign(prop_assign(a, copies)),
            StmtKind::MultiAssign { targets, value } => {
                let value = subst_copies(value, copies);
                let mut written = BTreeSet::new();
                collect_incdec_defs(&value, &mut written);
                for t in targets {
                    written.insert(t.name().to_string());
                }
                for w in &written {
                    invalidate(copies, w);
                }
                StmtKind::MultiAssign {
                    targets: targets.clone(),
                    value,
                }
            }
            StmtKind::Read(lv) => {
                let lv = match lv {
                    LValue::Var(n) => LValue::Var(n.clone()),
                    LValue::Elem(n, idx) => {
                        LValue::Elem(n.clone(), Box::new(subst_copies(idx, copies)))
                    }
                };
                let mut written = BTreeSet::new();
                written.insert(lv.name().to_string());
                if let LValue::Elem(_, idx) = &lv {
                    collect_incdec_defs(idx, &mut written);
                }
                for w in &written {
                    invalidate(copies, w);
                }
                StmtKind::Read(lv)
            }
            StmtKind::Print(e) => {
                let e = subst_copies(e, copies);
                let mut written = BTreeSet::new();
                collect_incdec_defs(&e, &mut written);
                for w in &written {
                    invalidate(copies, w);
                }
                StmtKind::Print(e)
            }
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                let cond = subst_copies(cond, copies);
                let mut written = BTreeSet::new();
                collect_incdec_defs(&cond, &mut written);
                for w in &written {
                    invalidate(copies, w);
                }
                let then_branch = prop_block(then_branch, &mut copies.clone());
                let else_branch = else_branch
                    .as_ref()
                    .map(|e| prop_block(e, &mut copies.clone()));
                invalidate_defs_of(&then_branch, copies);
                if let Some(e) = &else_branch {
                    invalidate_defs_of(e, copies);
                }
                StmtKind::If {
                    cond,
                    then_branch,
                    else_branch,
                }
            }
            StmtKind::While { cond, body } => {
                // Copies killed anywhere in the body — or by an increment
                // embedded in the condition itself — are unusable even in
                // the condition, which re-evaluates after each iteration.
                invalidate_defs_of(body, copies);
                let mut cond_writes = BTreeSet::new();
                collect_incdec_defs(cond, &mut cond_writes);
                for w in &cond_writes {
                    invalidate(copies, w);
                }
                let cond = subst_copies(cond, copies);
                let body = prop_block(body, &mut copies.clone());
                StmtKind::While { cond, body }
            }
            StmtKind::For {
                init,
                cond,
                update,
                body,
            } => {
                let init: Vec<Assign> = init.iter().map(|a| prop_assign(a, copies)).collect();
                let mut loop_defs = BTreeSet::new();
                stmts_defs(body, &mut loop_defs);
                collect_incdec_defs(cond, &mut loop_defs);
                for a in update {
                    loop_defs.insert(assign_target(a).name().to_string());
                    collect_incdec_defs_assign(a, &mut loop_defs);
                }
                for d in &loop_defs {
                    invalidate(copies, d);
                }
                let cond = subst_copies(cond, copies);
                let body = prop_block(body, &mut copies.clone());
                let update: Vec<Assign> = update
                    .iter()
                    .map(|a| prop_assign(a, &mut copies.clone()))
                    .collect();
                StmtKind::For {
                    init,
                    cond,
                    update,
                    body,
                }
            }
        };
        out.push(Stmt {
            label: s.label,
            kind,
        });
    }
    out
}

/// Replaces uses of variables that merely rename another variable or a
/// fixed array element with the thing they rename.
pub fn copy_propagate(p: &Program) -> Program {
    Program {
        decls: p.decls.clone(),
        body: prop_block(&p.body, &mut Copies::new()),
    }
}

// ---------------------------------------------------------------------
// constant folding

fn fold_expr(e: &Expr) -> Expr {
    match e {
        Expr::Int(_) => e.clone(),
        Expr::LValue(LValue::Var(_)) => e.clone(),
        Expr::LValue(LValue::Elem(n, idx)) => {
            Expr::LValue(LValue::Elem(n.clone(), Box::new(fold_expr(idx))))
        }
        Expr::Unary(op, inner) => {
            let inner = fold_expr(inner);
            match (op, &inner) {
                (UnOp::Neg, Expr::Int(v)) => Expr::Int(v.wrapping_neg()),
                (UnOp::Not, Expr::Int(v)) => Expr::Int((*v == 0) as i64),
                _ => Expr::Unary(*op, Box::new(inner)),
            }
        }
        Expr::IncDec { op, prefix, target } => {
            let target = match target {
                LValue::Var(n) => LValue::Var(n.clone()),
                LValue::Elem(n, idx) => LValue::Elem(n.clone(), Box::new(fold_expr(idx))),
            };
            Expr::IncDec {
                op: *op,
                prefix: *prefix,
                target,
            }
        }
        Expr::Binary(op, l, r) => {
            let l = fold_expr(l);
            let r = fold_expr(r);
            if let (Expr::Int(a), Expr::Int(b)) = (&l, &r) {
                let (a, b) = (*a, *b);
                let v = match op {
                    BinOp::Add => Some(a.wrapping_add(b)),
                    BinOp::Sub => Some(a.wrapping_sub(b)),
                    BinOp::Mul => Some(a.wrapping_mul(b)),
                    // A constant division by zero is a fault, not a value;
                    // leave it to be hit at run time.
                    BinOp::Div if b != 0 => Some(a.wrapping_div(b)),
                    BinOp::Mod if b != 0 => Some(a.wrapping_rem(b)),
                    BinOp::Div | BinOp::Mod => None,
                    BinOp::Lt => Some((a < b) as i64),
                    BinOp::Le => Some((a <= b) as i64),
                    BinOp::Gt => Some((a > b) as i64),
                    BinOp::Ge => Some((a >= b) as i64),
                    BinOp::Eq => Some((a == b) as i64),
                    BinOp::Ne => Some((a != b) as i64),
                    BinOp::And => Some((a != 0 && b != 0) as i64),
                    BinOp::Or => Some((a != 0 || b != 0) as i64),
                };
                if let Some(v) = v {
                    return Expr::Int(v);
                }
            }
            Expr::Binary(*op, Box::new(l), Box::new(r))
        }
    }
}

fn fold_assign(a: &Assign) -> Assign {
    match a {
        Assign::Set { target, op, value } => Assign::Set {
            target: fold_lvalue(target),
            op: *op,
            value: fold_expr(value),
        },
        Assign::IncDec { target, op, prefix } => Assign::IncDec {
            target: fold_lvalue(target),
            op: *op,
            prefix: *prefix,
        },
    }
}

fn fold_lvalue(lv: &LValue) -> LValue {
    match lv {
        LValue::Var(n) => LValue::Var(n.clone()),
        LValue::Elem(n, idx) => LValue::Elem(n.clone(), Box::new(fold_expr(idx))),
    }
}

fn fold_block(stmts: &[Stmt]) -> Vec<Stmt> {
    stmts
        .iter()
        .map(|s| Stmt {
            label: s.label,
            kind: match &s.kind {
                StmtKind::Assign(a) => StmtKind::Assign(fold_assign(a)),
                StmtKind::MultiAssign { targets, value } => StmtKind::MultiAssign {
                    targets: targets.iter().map(fold_lvalue).collect(),
                    value: fold_expr(value),
                },
                StmtKind::Read(lv) => StmtKind::Read(fold_lvalue(lv)),
                StmtKind::Print(e) => StmtKind::Print(fold_expr(e)),
                StmtKind::If {
                    cond,
                    then_branch,
                    else_branch,
                } => StmtKind::If {
                    cond: fold_expr(cond),
                    then_branch: fold_block(then_branch),
                    else_branch: else_branch.as_ref().map(|e| fold_block(e)),
                },
                StmtKind::While { cond, body } => StmtKind::While {
                    cond: fold_expr(cond),
                    body: fold_block(body),
                },
                StmtKind::For {
                    init,
                    cond,
                    update,
                    body,
                } => StmtKind::For {
                    init: init.iter().map(fold_assign).collect(),
                    cond: fold_expr(cond),
                    update: update.iter().map(fold_assign).collect(),
                    body: fold_block(body),
                },
            },
        })
        .collect()
}

/// Evaluates constant subexpressions in place: `2 + 3` becomes `5`.
/// Nothing is propagated between statements.
pub fn constant_fold(p: &Program) -> Program {
    Program {
        decls: p.decls.clone(),
        body: fold_block(&p.body),
    }
}

// ---------------------------------------------------------------------
// loop final value

fn subst_var(e: &Expr, var: &str, value: i64) -> Expr {
    match e {
        Expr::Int(_) => e.clone(),
        Expr::LValue(LValue::Var(n)) if n == var => Expr::Int(value),
        Expr::LValue(LValue::Var(_)) => e.clone(),
        Expr::LValue(LValue::Elem(n, idx)) => Expr::LValue(LValue::Elem(
            n.clone(),
            Box::new(subst_var(idx, var, value)),
        )),
        Expr::Unary(op, inner) => Expr::Unary(*op, Box::new(subst_var(inner, var, value))),
        Expr::IncDec { .. } => e.clone(),
        Expr::Binary(op, l, r) => Expr::Binary(
            *op,
            Box::new(subst_var(l, var, value)),
            Box::new(subst_var(r, var, value)),
        ),
    }
}

/// The fresh-label placeholder; callers relabel the program afterwards.
const NEW: Label = Label(0);

fn lfv_block(stmts: &[Stmt]) -> Vec<Stmt> {
    let mut out = Vec::with_capacity(stmts.len());
    for s in stmts {
        let rebuilt = Stmt {
            label: s.label,
            kind: match &s.kind {
                StmtKind::If {
                    cond,
                    then_branch,
                    else_branch,
                } => StmtKind::If {
                    cond: cond.clone(),
                    then_branch: lfv_block(then_branch),
                    else_branch: else_branch.as_ref().map(|e| lfv_block(e)),
                },
                StmtKind::While { cond, body } => StmtKind::While {
                    cond: cond.clone(),
                    body: lfv_block(body),
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
                    body: lfv_block(body),
                },
                other => other.clone(),
            },
        };
        let StmtKind::For {
            init,
            cond,
            update,
            body,
        } = &rebuilt.kind
        else {
            out.push(rebuilt);
            continue;
        };
        let Some(counted) = recognize_counted(init, cond, update, body) else {
            out.push(rebuilt);
            continue;
        };
        if counted.iterations < 1 {
            out.push(rebuilt);
            continue;
        }

        let mut loop_defs = BTreeSet::new();
        stmts_defs(body, &mut loop_defs);
        for a in update {
            loop_defs.insert(assign_target(a).name().to_string());
        }
        let mut loop_uses = BTreeSet::new();
        expr_uses(cond, &mut loop_uses);
        stmts_uses(body, &mut loop_uses);
        for a in update {
            assign_uses(a, &mut loop_uses);
        }

        // Candidate sites: unconditional `v = E`, either a top-level body
        // statement or an update entry.  `E` may read the counter and
        // loop-invariant names only; `v` itself must be loop-unused and
        // written nowhere else in the loop.
        enum Site {
            Body(usize),
            Update(usize),
        }
        let mut extracted: Vec<(Site, String, Expr)> = Vec::new();
        let candidates = body
            .iter()
            .enumerate()
            .filter_map(|(i, st)| match &st.kind {
                StmtKind::Assign(a) => Some((Site::Body(i), a)),
                _ => None,
            })
            .chain(
                update
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != counted.update_idx)
                    .map(|(i, a)| (Site::Update(i), a)),
            );
        for (site, a) in candidates {
            let Assign::Set {
                target: LValue::Var(v),
                op: AssignOp::Set,
                value,
            } = a
            else {
                continue;
            };
            if v == &counted.var || !value.is_pure() {
                continue;
            }
            let mut e_uses = BTreeSet::new();
            expr_uses(value, &mut e_uses);
            e_uses.remove(&counted.var);
            if e_uses.iter().any(|u| loop_defs.contains(u)) {
                continue;
            }
            if loop_uses.contains(v) {
                continue;
            }
            let writes = body
                .iter()
                .filter(|st| {
                    let mut d = BTreeSet::new();
                    stmts_defs(std::slice::from_ref(st), &mut d);
                    d.contains(v)
                })
                .count()
                + update
                    .iter()
                    .filter(|u| assign_target(u).name() == v)
                    .count();
            if writes != 1 {
                continue;
            }
            // Counter value at the assignment's last execution: body
            // statements and update entries before the increment run with
            // the pre-increment value.
            let at_last = match site {
                Site::Body(_) => counted.final_value - 1,
                Site::Update(i) if i < counted.update_idx => counted.final_value - 1,
                Site::Update(_) => counted.final_value,
            };
            extracted.push((site, v.clone(), subst_var(value, &counted.var, at_last)));
        }

        if extracted.is_empty() {
            out.push(rebuilt);
            continue;
        }
        let drop_body: BTreeSet<usize> = extracted
            .iter()
            .filter_map(|(s, _, _)| match s {
                Site::Body(i) => Some(*i),
                _ => None,
            })
            .collect();
        let drop_update: BTreeSet<usize> = extracted
            .iter()
            .filter_map(|(s, _, _)| match s {
                Site::Update(i) => Some(*i),
                _ => None,
            })
            .collect();
        let new_body: Vec<Stmt> = body
            .iter()
            .enumerate()
            .filter(|(i, _)| !drop_body.contains(i))
            .map(|(_, st)| st.clone())
            .collect();
        let new_update: Vec<Assign> = update
            .iter()
            .enumerate()
            .filter(|(i, _)| !drop_update.contains(i))
            .map(|(_, a)| a.clone())
            .collect();
        out.push(Stmt {
            label: rebuilt.label,
            kind: StmtKind::For {
                init: init.clone(),
                cond: cond.clone(),
                update: new_update,
                body: new_body,
            },
        });
        for (_, v, e) in extracted {
            out.push(Stmt {
                label: NEW,
                kind: StmtKind::Assign(Assign::set(LValue::Var(v), e)),
            });
        }
    }
    out
}

/// Replaces a counted loop's per-iteration recurrence `v = E(i)` — when
/// `v` feeds nothing inside the loop — with a single `v = E(i_final)`
/// after the loop.
pub fn loop_final_value(p: &Program) -> Program {
    Program {
        decls: p.decls.clone(),
        body: lfv_block(&p.body),
    }
}

// ---------------------------------------------------------------------
// dead code elimination

fn live_transfer_assign(a: &Assign, live: &mut BTreeSet<String>) {
    match a {
        Assign::Set { target, op, .. } => {
            if let LValue::Var(x) = target {
                if *op == AssignOp::Set {
                    live.remove(x);
                }
            }
            assign_uses(a, live);
        }
        Assign::IncDec { .. } => assign_uses(a, live),
    }
}

fn dce_block(stmts: &[Stmt], live: &mut BTreeSet<String>) -> Vec<Stmt> {
    let mut kept_rev: Vec<Stmt> = Vec::new();
    for s in stmts.iter().rev() {
        match &s.kind {
            StmtKind::Assign(a) => {
                let dead = !live.contains(assign_target(a).name());
                if dead && assign_is_pure(a) {
                    continue;
                }
                live_transfer_assign(a, live);
                kept_rev.push(s.clone());
            }
            StmtKind::MultiAssign { targets, value } => {
                let dead = targets.iter().all(|t| !live.contains(t.name()));
                if dead && value.is_pure() {
                    continue;
                }
                for t in targets {
                    if let LValue::Var(x) = t {
                        live.remove(x);
                    }
                    if let LValue::Elem(_, idx) = t {
                        expr_uses(idx, live);
                    }
                }
                expr_uses(value, live);
                kept_rev.push(s.clone());
            }
            StmtKind::Read(lv) => {
                if !live.contains(lv.name()) {
                    // A read nobody needs: dropping it also drops the
                    // input consumption, which channel-based replay keeps
                    // aligned.
                    continue;
                }
                if let LValue::Var(x) = lv {
                    live.remove(x);
                }
                if let LValue::Elem(_, idx) = lv {
                    expr_uses(idx, live);
                }
                kept_rev.push(s.clone());
            }
            StmtKind::Print(e) => {
                expr_uses(e, live);
                kept_rev.push(s.clone());
            }
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                let mut live_then = live.clone();
                let kept_then = dce_block(then_branch, &mut live_then);
                let (kept_else, live_else) = match else_branch {
                    Some(els) => {
                        let mut le = live.clone();
                        let ke = dce_block(els, &mut le);
                        (ke, le)
                    }
                    None => (Vec::new(), live.clone()),
                };
                if kept_then.is_empty() && kept_else.is_empty() && cond.is_pure() {
                    continue;
                }
                *live = &live_then | &live_else;
                expr_uses(cond, live);
                kept_rev.push(Stmt {
                    label: s.label,
                    kind: StmtKind::If {
                        cond: cond.clone(),
                        then_branch: kept_then,
                        else_branch: if kept_else.is_empty() {
                            None
                        } else {
                            Some(kept_else)
                        },
                    },
                });
            }
            StmtKind::While { cond, body } => {
                let mut live_fix = live.clone();
                expr_uses(cond, &mut live_fix);
                loop {
                    let mut l = live_fix.clone();
                    let _ = dce_block(body, &mut l);
                    let merged: BTreeSet<String> = &live_fix | &l;
                    if merged == live_fix {
                        break;
                    }
                    live_fix = merged;
                }
                let kept_body = dce_block(body, &mut live_fix.clone());
                // A loop whose body is empty may still not terminate, so
                // it is never removed here.
                *live = live_fix;
                kept_rev.push(Stmt {
                    label: s.label,
                    kind: StmtKind::While {
                        cond: cond.clone(),
                        body: kept_body,
                    },
                });
            }
            StmtKind::For {
                init,
                cond,
                update,
                body,
            } => {
                let mut live_fix = live.clone();
                expr_uses(cond, &mut live_fix);
                loop {
                    let mut l = live_fix.clone();
                    for a in update.iter().rev() {
                        live_transfer_assign(a, &mut l);
                    }
                    let _ = dce_block(body, &mut l);
                    let merged: BTreeSet<String> = &live_fix | &l;
                    if merged == live_fix {
                        break;
                    }
                    live_fix = merged;
                }
                let mut lu = live_fix.clone();
                let mut new_update_rev: Vec<Assign> = Vec::new();
                for a in update.iter().rev() {
                    let dead = !lu.contains(assign_target(a).name());
                    if dead && assign_is_pure(a) {
                        continue;
                    }
                    live_transfer_assign(a, &mut lu);
                    new_update_rev.push(a.clone());
                }
                new_update_rev.reverse();
                let new_body = dce_block(body, &mut lu.clone());
                let mut li = live_fix.clone();
                let mut new_init_rev: Vec<Assign> = Vec::new();
                for a in init.iter().rev() {
                    let dead = !li.contains(assign_target(a).name());
                    if dead && assign_is_pure(a) {
                        continue;
                    }
                    live_transfer_assign(a, &mut li);
                    new_init_rev.push(a.clone());
                }
                new_init_rev.reverse();
                *live = li;
                kept_rev.push(Stmt {
                    label: s.label,
                    kind: StmtKind::For {
                        init: new_init_rev,
                        cond: cond.clone(),
                        update: new_update_rev,
                        body: new_body,
                    },
                });
            }
        }
    }
    kept_rev.reverse();
    kept_rev
}

/// Removes assignments and reads whose results cannot reach the roots or
/// any print, and branches that end up with nothing in them.
pub fn dead_code_eliminate(p: &Program, roots: &BTreeSet<String>) -> Program {
    let mut live = roots.clone();
    Program {
        decls: p.decls.clone(),
        body: dce_block(&p.body, &mut live),
    }
}

// ---------------------------------------------------------------------
// empty loop removal

/// Labels of removable loops: counted (hence terminating), empty body,
/// pure header, and no header-written variable needed anywhere else.
fn find_removable_loop(
    p: &Program,
    roots: &BTreeSet<String>,
) -> Option<Label> {
    let mut result = None;
    visit_stmts(&p.body, &mut |s| {
        if result.is_some() {
            return;
        }
        let StmtKind::For {
            init,
            cond,
            update,
            body,
        } = &s.kind
        else {
            return;
        };
        if !body.is_empty() || recognize_counted(init, cond, update, body).is_none() {
            return;
        }
        if !init.iter().chain(update).all(assign_is_pure) || !cond.is_pure() {
            return;
        }
        let header_targets: BTreeSet<String> = init
            .iter()
            .chain(update)
            .map(|a| assign_target(a).name().to_string())
            .collect();
        if header_targets.iter().any(|t| roots.contains(t)) {
            return;
        }
        // Uses of the header targets anywhere outside this statement.  An
        // empty body means the loop's subtree is the header alone, so
        // excluding the label excludes the whole subtree.
        let mut outside = BTreeSet::new();
        visit_stmts(&p.body, &mut |other| {
            if other.label != s.label {
                stmt_own_uses(other, &mut outside);
            }
        });
        if header_targets.iter().all(|t| !outside.contains(t)) {
            result = Some(s.label);
        }
    });
    result
}

fn remove_stmt(stmts: &[Stmt], label: Label) -> Vec<Stmt> {
    let mut out = Vec::with_capacity(stmts.len());
    for s in stmts {
        if s.label == label {
            continue;
        }
        out.push(Stmt {
            label: s.label,
            kind: match &s.kind {
                StmtKind::If {
                    cond,
                    then_branch,
                    else_branch,
                } => StmtKind::If {
                    cond: cond.clone(),
                    then_branch: remove_stmt(then_branch, label),
                    else_branch: else_branch.as_ref().map(|e| remove_stmt(e, label)),
                },
                StmtKind::While { cond, body } => StmtKind::While {
                    cond: cond.clone(),
                    body: remove_stmt(body, label),
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
                    body: remove_stmt(body, label),
                },
                other => other.clone(),
            },
        });
    }
    out
}

/// Deletes counted loops that provably terminate, run an empty body, and
/// compute nothing anyone reads.
pub fn empty_loop_removal(p: &Program, roots: &BTreeSet<String>) -> Program {
    let mut prog = p.clone();
    while let Some(label) = find_removable_loop(&prog, roots) {
        prog = Program {
            decls: prog.decls.clone(),
            body: remove_stmt(&prog.body, label),
        };
    }
    prog
}

// ---------------------------------------------------------------------
// index normalization

/// Counts plain `Var(i)` occurrences and `i + 1` pattern occurrences.
fn count_counter_uses(e: &Expr, var: &str, bare: &mut usize, shifted: &mut usize) {
    if let Expr::Binary(BinOp::Add, l, r) = e {
        if matches!(l.as_ref(), Expr::LValue(LValue::Var(n)) if n == var)
            && matches!(r.as_ref(), Expr::Int(1))
        {
            *shifted += 1;
            return;
        }
    }
    match e {
        Expr::Int(_) => {}
        Expr::LValue(LValue::Var(n)) => {
            if n == var {
                *bare += 1;
            }
        }
        Expr::LValue(LValue::Elem(_, idx)) => count_counter_uses(idx, var, bare, shifted),
        Expr::Unary(_, inner) => count_counter_uses(inner, var, bare, shifted),
        Expr::IncDec { target, .. } => {
            if let LValue::Var(n) = target {
                if n == var {
                    *bare += 1;
                }
            }
            if let LValue::Elem(_, idx) = target {
                count_counter_uses(idx, var, bare, shifted);
            }
        }
        Expr::Binary(_, l, r) => {
            count_counter_uses(l, var, bare, shifted);
            count_counter_uses(r, var, bare, shifted);
        }
    }
}

fn shift_expr(e: &Expr, var: &str) -> Expr {
    if let Expr::Binary(BinOp::Add, l, r) = e {
        if matches!(l.as_ref(), Expr::LValue(LValue::Var(n)) if n == var)
            && matches!(r.as_ref(), Expr::Int(1))
        {
            return Expr::var(var);
        }
    }
    match e {
        Expr::Int(_) | Expr::LValue(LValue::Var(_)) => e.clone(),
        Expr::LValue(LValue::Elem(n, idx)) => {
            Expr::LValue(LValue::Elem(n.clone(), Box::new(shift_expr(idx, var))))
        }
        Expr::Unary(op, inner) => Expr::Unary(*op, Box::new(shift_expr(inner, var))),
        Expr::IncDec { .. } => e.clone(),
        Expr::Binary(op, l, r) => Expr::Binary(
            *op,
            Box::new(shift_expr(l, var)),
            Box::new(shift_expr(r, var)),
        ),
    }
}

fn map_block_exprs(stmts: &[Stmt], f: &impl Fn(&Expr) -> Expr) -> Vec<Stmt> {
    let map_assign = |a: &Assign| match a {
        Assign::Set { target, op, value } => Assign::Set {
            target: map_lvalue(target, f),
            op: *op,
            value: f(value),
        },
        Assign::IncDec { target, op, prefix } => Assign::IncDec {
            target: map_lvalue(target, f),
            op: *op,
            prefix: *prefix,
        },
    };
    stmts
        .iter()
        .map(|s| Stmt {
            label: s.label,
            kind: match &s.kind {
                StmtKind::Assign(a) => StmtKind::Assign(map_assign(a)),
                StmtKind::MultiAssign { targets, value } => StmtKind::MultiAssign {
                    targets: targets.iter().map(|t| map_lvalue(t, f)).collect(),
                    value: f(value),
                },
                StmtKind::Read(lv) => StmtKind::Read(map_lvalue(lv, f)),
                StmtKind::Print(e) => StmtKind::Print(f(e)),
                StmtKind::If {
                    cond,
                    then_branch,
                    else_branch,
                } => StmtKind::If {
                    cond: f(cond),
                    then_branch: map_block_exprs(then_branch, f),
                    else_branch: else_branch.as_ref().map(|e| map_block_exprs(e, f)),
                },
                StmtKind::While { cond, body } => StmtKind::While {
                    cond: f(cond),
                    body: map_block_exprs(body, f),
                },
                StmtKind::For {
                    init,
                    cond,
                    update,
                    body,
                } => StmtKind::For {
                    init: init.iter().map(map_assign).collect(),
                    cond: f(cond),
                    update: update.iter().map(map_assign).collect(),
                    body: map_block_exprs(body, f),
                },
            },
        })
        .collect()
}

fn map_lvalue(lv: &LValue, f: &impl Fn(&Expr) -> Expr) -> LValue {
    match lv {
        LValue::Var(n) => LValue::Var(n.clone()),
        LValue::Elem(n, idx) => LValue::Elem(n.clone(), Box::new(f(idx))),
    }
}

fn index_normalize_block(stmts: &[Stmt], p: &Program, roots: &BTreeSet<String>) -> Vec<Stmt> {
    let mut out = Vec::with_capacity(stmts.len());
    for s in stmts {
        let rebuilt_kind = match &s.kind {
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => StmtKind::If {
                cond: cond.clone(),
                then_branch: index_normalize_block(then_branch, p, roots),
                else_branch: else_branch
                    .as_ref()
                    .map(|e| index_normalize_block(e, p, roots)),
            },
            StmtKind::While { cond, body } => StmtKind::While {
                cond: cond.clone(),
                body: index_normalize_block(body, p, roots),
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
                body: index_normalize_block(body, p, roots),
            },
            other => other.clone(),
        };
        let candidate = (|| {
            let StmtKind::For {
                init,
                cond,
                update,
                body,
            } = &rebuilt_kind
            else {
                return None;
            };
            let counted = recognize_counted(init, cond, update, body)?;
            let i = &counted.var;
            if roots.contains(i) {
                return None;
            }
            // Every body use of the counter must be `i + 1`; the other
            // header entries must not mention it at all.
            let (mut bare, mut shifted) = (0usize, 0usize);
            let mut count_in = |e: &Expr| count_counter_uses(e, i, &mut bare, &mut shifted);
            visit_stmts(body, &mut |st| match &st.kind {
                StmtKind::Assign(Assign::Set { target, value, .. }) => {
                    if let LValue::Elem(_, idx) = target {
                        count_in(idx);
                    }
                    if let LValue::Var(n) = target {
                        // writing to the counter is excluded by the
                        // recognizer already
                        let _ = n;
                    }
                    count_in(value);
                }
                StmtKind::Assign(Assign::IncDec { target, .. }) => {
                    if let LValue::Elem(_, idx) = target {
                        count_in(idx);
                    }
                }
                StmtKind::MultiAssign { targets, value } => {
                    for t in targets {
                        if let LValue::Elem(_, idx) = t {
                            count_in(idx);
                        }
                    }
                    count_in(value);
                }
                StmtKind::Read(LValue::Elem(_, idx)) => count_in(idx),
                StmtKind::Read(_) => {}
                StmtKind::Print(e) => count_in(e),
                StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => count_in(cond),
                StmtKind::For {
                    init, cond, update, ..
                } => {
                    count_in(cond);
                    for a in init.iter().chain(update) {
                        match a {
                            Assign::Set { target, value, .. } => {
                                if let LValue::Elem(_, idx) = target {
                                    count_in(idx);
                                }
                                count_in(value);
                            }
                            Assign::IncDec { target, .. } => {
                                if let LValue::Elem(_, idx) = target {
                                    count_in(idx);
                                }
                            }
                        }
                    }
                }
            });
            if bare != 0 || shifted == 0 {
                return None;
            }
            let mut header_other_uses = BTreeSet::new();
            for (j, a) in update.iter().enumerate() {
                if j != counted.update_idx {
                    assign_uses(a, &mut header_other_uses);
                }
            }
            for a in init {
                if assign_target(a).name() != i.as_str() {
                    assign_uses(a, &mut header_other_uses);
                }
            }
            if header_other_uses.contains(i) {
                return None;
            }
            // The counter must be this loop's private business: nothing
            // outside the loop's own subtree may read or write it.
            let mut inside = BTreeSet::new();
            visit_stmts(std::slice::from_ref(s), &mut |st| {
                inside.insert(st.label);
            });
            let mut outside = BTreeSet::new();
            visit_stmts(&p.body, &mut |other| {
                if !inside.contains(&other.label) {
                    stmt_own_uses(other, &mut outside);
                    stmt_own_defs(other, &mut outside);
                }
            });
            if outside.contains(i) {
                return None;
            }
            // Shift: new counter = old counter + 1.
            let (k0, bound) = {
                let k0 = init.iter().rev().find_map(|a| match a {
                    Assign::Set {
                        target: LValue::Var(n),
                        value: Expr::Int(k),
                        ..
                    } if n == i => Some(*k),
                    _ => None,
                })?;
                let Expr::Binary(_, _, r) = cond else { return None };
                let Expr::Int(k) = r.as_ref() else { return None };
                (k0, *k)
            };
            let new_k0 = k0.checked_add(1)?;
            let new_bound = bound.checked_add(1)?;
            let new_init: Vec<Assign> = init
                .iter()
                .map(|a| match a {
                    Assign::Set {
                        target: LValue::Var(n),
                        op,
                        value: Expr::Int(_),
                    } if n == i => Assign::Set {
                        target: LValue::Var(n.clone()),
                        op: *op,
                        value: Expr::Int(new_k0),
                    },
                    other => other.clone(),
                })
                .collect();
            let Expr::Binary(cmp, l, _) = cond else { return None };
            let new_cond = Expr::Binary(*cmp, l.clone(), Box::new(Expr::Int(new_bound)));
            let shifter = |e: &Expr| shift_expr(e, i);
            let new_body = map_block_exprs(body, &shifter);
            Some(StmtKind::For {
                init: new_init,
                cond: new_cond,
                update: update.clone(),
                body: new_body,
            })
        })();
        out.push(Stmt {
            label: s.label,
            kind: candidate.unwrap_or(rebuilt_kind),
        });
    }
    out
}

/// When a counted loop reads its counter only as `i + 1`, starts the
/// counter one higher and drops the offset: `a[i + 1]` becomes `a[i]`.
pub fn index_normalize(p: &Program, roots: &BTreeSet<String>) -> Program {
    Program {
        decls: p.decls.clone(),
        body: index_normalize_block(&p.body, p, roots),
    }
}
