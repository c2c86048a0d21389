//! Conditioned slicing: slice under an assumption about input values.
//!
//! The caller fixes some variables to known constants.  Each fixing
//! takes effect at the variable's first definition point — typically a
//! `read()` — and constant propagation then decides predicates that the
//! assumption settles.  A predicate that is decidably false is pruned
//! together with the branch it guards (the surviving branch is spliced
//! in its place, keeping original labels), and the static backward slice
//! of the pruned program is returned, again in the original numbering.
//! With no fixings at all the result is exactly the static backward
//! slice.
//!
//! Abstract values form the two-point lattice `known(k) < unknown`;
//! scalars start at `known(0)`, array contents are never tracked.  A
//! decidably-false `while` is dropped whole; a `for` is always kept,
//! since its init assignments run regardless of the test.  Predicates
//! whose condition has an embedded `++`/`--` are never pruned, because
//! removing them would lose the side effect.

use crate::dependence::build_cfg;
use crate::lang::ast::*;
use crate::slicer::{backward_slice, Criterion};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CondError {
    #[error("no statement with label {0}")]
    UnknownLabel(Label),
    #[error("variable `{0}` is not declared")]
    UnknownVariable(String),
    #[error("fixed variable `{0}` is not declared")]
    UnknownFixedVariable(String),
    #[error("cannot fix `{var}` to {fixed}: its first definition at {at} assigns {actual}")]
    ContradictoryFixing {
        var: String,
        at: Label,
        fixed: i64,
        actual: i64,
    },
    #[error("the criterion statement {at} is unreachable under the given fixing")]
    CriterionUnreachable { at: Label },
}

#[derive(Debug, Clone)]
pub struct ConditionedSlice {
    pub criterion: Criterion,
    pub fixed: BTreeMap<String, i64>,
    /// Slice labels in the original program's numbering.
    pub labels: BTreeSet<Label>,
    pub program: Program,
    /// Labels removed from candidacy by branch pruning.
    pub pruned: BTreeSet<Label>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Av {
    Known(i64),
    Unknown,
}

impl Av {
    fn truth(self) -> Av {
        match self {
            Av::Known(v) => Av::Known((v != 0) as i64),
            Av::Unknown => Av::Unknown,
        }
    }
}

type Env = BTreeMap<String, Av>;

fn join_env(a: &Env, b: &Env) -> Env {
    a.iter()
        .map(|(k, &va)| {
            let v = match (va, b.get(k).copied().unwrap_or(Av::Unknown)) {
                (Av::Known(x), Av::Known(y)) if x == y => Av::Known(x),
                _ => Av::Unknown,
            };
            (k.clone(), v)
        })
        .collect()
}

fn eval(e: &Expr, env: &Env) -> Av {
    match e {
        Expr::Int(v) => Av::Known(*v),
        Expr::LValue(LValue::Var(n)) => env.get(n).copied().unwrap_or(Av::Unknown),
        Expr::LValue(LValue::Elem(..)) => Av::Unknown,
        Expr::Unary(UnOp::Neg, inner) => match eval(inner, env) {
            Av::Known(v) => Av::Known(v.wrapping_neg()),
            Av::Unknown => Av::Unknown,
        },
        Expr::Unary(UnOp::Not, inner) => match eval(inner, env) {
            Av::Known(v) => Av::Known((v == 0) as i64),
            Av::Unknown => Av::Unknown,
        },
        Expr::IncDec { .. } => Av::Unknown,
        Expr::Binary(op, l, r) => {
            let lv = eval(l, env);
            let rv = eval(r, env);
            match op {
                BinOp::And => match (lv.truth(), rv.truth()) {
                    (Av::Known(0), _) | (_, Av::Known(0)) => Av::Known(0),
                    (Av::Known(_), Av::Known(_)) => Av::Known(1),
                    _ => Av::Unknown,
                },
                BinOp::Or => match (lv.truth(), rv.truth()) {
                    (Av::Known(1), _) | (_, Av::Known(1)) => Av::Known(1),
                    (Av::Known(_), Av::Known(_)) => Av::Known(0),
                    _ => Av::Unknown,
                },
                _ => {
                    let (Av::Known(x), Av::Known(y)) = (lv, rv) else {
                        return Av::Unknown;
                    };
                    match op {
                        BinOp::Add => Av::Known(x.wrapping_add(y)),
                        BinOp::Sub => Av::Known(x.wrapping_sub(y)),
                        BinOp::Mul => Av::Known(x.wrapping_mul(y)),
                        BinOp::Div | BinOp::Mod if y == 0 => Av::Unknown,
                        BinOp::Div => Av::Known(x.wrapping_div(y)),
                        BinOp::Mod => Av::Known(x.wrapping_rem(y)),
                        BinOp::Lt => Av::Known((x < y) as i64),
                        BinOp::Le => Av::Known((x <= y) as i64),
                        BinOp::Gt => Av::Known((x > y) as i64),
                        BinOp::Ge => Av::Known((x >= y) as i64),
                        BinOp::Eq => Av::Known((x == y) as i64),
                        BinOp::Ne => Av::Known((x != y) as i64),
                        BinOp::And | BinOp::Or => unreachable!(),
                    }
                }
            }
        }
    }
}

/// Scalar `++`/`--` targets buried in an expression; their values become
/// unknown after any statement evaluating it.
fn incdec_targets(e: &Expr, out: &mut BTreeSet<String>) {
    match e {
        Expr::Int(_) => {}
        Expr::LValue(LValue::Var(_)) => {}
        Expr::LValue(LValue::Elem(_, idx)) => incdec_targets(idx, out),
        Expr::Unary(_, inner) => incdec_targets(inner, out),
        Expr::IncDec { target, .. } => {
            if let LValue::Var(n) = target {
                out.insert(n.clone());
            }
            if let LValue::Elem(_, idx) = target {
                incdec_targets(idx, out);
            }
        }
        Expr::Binary(_, l, r) => {
            incdec_targets(l, out);
            incdec_targets(r, out);
        }
    }
}

fn has_incdec(e: &Expr) -> bool {
    let mut s = BTreeSet::new();
    incdec_targets(e, &mut s);
    if !s.is_empty() {
        return true;
    }
    // Element-target increments leave no scalar behind but still count.
    match e {
        Expr::IncDec { .. } => true,
        Expr::Unary(_, inner) => has_incdec(inner),
        Expr::Binary(_, l, r) => has_incdec(l) || has_incdec(r),
        Expr::LValue(LValue::Elem(_, idx)) => has_incdec(idx),
        _ => false,
    }
}

fn subtree_labels(stmts: &[Stmt], out: &mut BTreeSet<Label>) {
    visit_stmts(stmts, &mut |s| {
        out.insert(s.label);
    });
}

/// Site of a definition: distinguishes a `for` header's parts so the
/// first-definition check does not confuse an init with an update.
type DefSite = crate::dependence::CfgNode;

struct Walker<'a> {
    fixed: &'a BTreeMap<String, i64>,
    first_def: BTreeMap<String, DefSite>,
    pruned: BTreeSet<Label>,
    /// While a loop's transfer is still being iterated to fixpoint the
    /// environment can hold stale constants for loop-carried variables, so
    /// pruning decisions and contradiction reports are deferred until the
    /// final pass over the stable environment.
    record: bool,
}

impl Walker<'_> {
    fn write_var(
        &mut self,
        site: DefSite,
        var: &str,
        value: Av,
        env: &mut Env,
    ) -> Result<(), CondError> {
        let applied = if self.first_def.get(var) == Some(&site) {
            if let Some(&fix) = self.fixed.get(var) {
                if let Av::Known(actual) = value {
                    if actual != fix && self.record {
                        return Err(CondError::ContradictoryFixing {
                            var: var.to_string(),
                            at: site.label().expect("definition sites are labeled"),
                            fixed: fix,
                            actual,
                        });
                    }
                }
                Av::Known(fix)
            } else {
                value
            }
        } else {
            value
        };
        env.insert(var.to_string(), applied);
        Ok(())
    }

    fn transfer_assign(
        &mut self,
        site: DefSite,
        a: &Assign,
        env: &mut Env,
    ) -> Result<(), CondError> {
        match a {
            Assign::Set { target, op, value } => {
                let rhs = eval(value, env);
                let mut bumped = BTreeSet::new();
                incdec_targets(value, &mut bumped);
                for v in bumped {
                    env.insert(v, Av::Unknown);
                }
                match target {
                    LValue::Var(n) => {
                        let cur = env.get(n).copied().unwrap_or(Av::Unknown);
                        let newv = match (op, cur, rhs) {
                            (AssignOp::Set, _, v) => v,
                            (_, Av::Known(x), Av::Known(y)) => match op {
                                AssignOp::Add => Av::Known(x.wrapping_add(y)),
                                AssignOp::Sub => Av::Known(x.wrapping_sub(y)),
                                AssignOp::Mul => Av::Known(x.wrapping_mul(y)),
                                AssignOp::Div if y == 0 => Av::Unknown,
                                AssignOp::Div => Av::Known(x.wrapping_div(y)),
                                AssignOp::Set => unreachable!(),
                            },
                            _ => Av::Unknown,
                        };
                        self.write_var(site, n, newv, env)?;
                    }
                    LValue::Elem(_, idx) => {
                        let mut bumped = BTreeSet::new();
                        incdec_targets(idx, &mut bumped);
                        for v in bumped {
                            env.insert(v, Av::Unknown);
                        }
                    }
                }
            }
            Assign::IncDec { target, op, .. } => {
                if let LValue::Var(n) = target {
                    let newv = match env.get(n).copied().unwrap_or(Av::Unknown) {
                        Av::Known(x) => Av::Known(match op {
                            IncDecOp::Inc => x.wrapping_add(1),
                            IncDecOp::Dec => x.wrapping_sub(1),
                        }),
                        Av::Unknown => Av::Unknown,
                    };
                    self.write_var(site, n, newv, env)?;
                }
            }
        }
        Ok(())
    }

    fn walk(&mut self, stmts: &[Stmt], env: &mut Env) -> Result<(), CondError> {
        use crate::dependence::CfgNode;
        for s in stmts {
            match &s.kind {
                StmtKind::Assign(a) => {
                    self.transfer_assign(CfgNode::Stmt(s.label), a, env)?;
                }
                StmtKind::MultiAssign { targets, value } => {
                    let v = eval(value, env);
                    let mut bumped = BTreeSet::new();
                    incdec_targets(value, &mut bumped);
                    for b in bumped {
                        env.insert(b, Av::Unknown);
                    }
                    for t in targets {
                        if let LValue::Var(n) = t {
                            self.write_var(CfgNode::Stmt(s.label), n, v, env)?;
                        }
                    }
                }
                StmtKind::Read(lv) => {
                    if let LValue::Var(n) = lv {
                        self.write_var(CfgNode::Stmt(s.label), n, Av::Unknown, env)?;
                    }
                }
                StmtKind::Print(e) => {
                    let mut bumped = BTreeSet::new();
                    incdec_targets(e, &mut bumped);
                    for v in bumped {
                        env.insert(v, Av::Unknown);
                    }
                }
                StmtKind::If {
                    cond,
                    then_branch,
                    else_branch,
                } => {
                    if eval(cond, env) == Av::Known(0) && !has_incdec(cond) {
                        if self.record {
                            self.pruned.insert(s.label);
                            subtree_labels(then_branch, &mut self.pruned);
                        }
                        if let Some(els) = else_branch {
                            self.walk(els, env)?;
                        }
                        continue;
                    }
                    let mut bumped = BTreeSet::new();
                    incdec_targets(cond, &mut bumped);
                    for v in bumped {
                        env.insert(v, Av::Unknown);
                    }
                    let mut then_env = env.clone();
                    self.walk(then_branch, &mut then_env)?;
                    if let Some(els) = else_branch {
                        let mut else_env = env.clone();
                        self.walk(els, &mut else_env)?;
                        *env = join_env(&then_env, &else_env);
                    } else {
                        *env = join_env(&then_env, env);
                    }
                }
                StmtKind::While { cond, body } => {
                    if eval(cond, env) == Av::Known(0) && !has_incdec(cond) {
                        if self.record {
                            self.pruned.insert(s.label);
                            subtree_labels(body, &mut self.pruned);
                        }
                        continue;
                    }
                    self.loop_fixpoint(cond, &[], body, env)?;
                }
                StmtKind::For {
                    init,
                    cond,
                    update,
                    body,
                } => {
                    for (i, a) in init.iter().enumerate() {
                        self.transfer_assign(CfgNode::ForInit(s.label, i as u32), a, env)?;
                    }
                    // A false test still lets the inits take effect, so a
                    // `for` is never pruned.
                    if eval(cond, env) == Av::Known(0) && !has_incdec(cond) {
                        continue;
                    }
                    let update_sites: Vec<(DefSite, &Assign)> = update
                        .iter()
                        .enumerate()
                        .map(|(i, a)| (CfgNode::ForUpdate(s.label, i as u32), a))
                        .collect();
                    self.loop_fixpoint(cond, &update_sites, body, env)?;
                }
            }
        }
        Ok(())
    }

    /// Iterates a loop's abstract transfer until the environment is
    /// stable.  Terminates because values only move from known toward
    /// unknown.
    fn loop_fixpoint(
        &mut self,
        cond: &Expr,
        updates: &[(DefSite, &Assign)],
        body: &[Stmt],
        env: &mut Env,
    ) -> Result<(), CondError> {
        let mut bumped = BTreeSet::new();
        incdec_targets(cond, &mut bumped);
        let was_recording = self.record;
        self.record = false;
        loop {
            let mut pass = env.clone();
            for v in &bumped {
                pass.insert(v.clone(), Av::Unknown);
            }
            self.walk(body, &mut pass)?;
            for (site, a) in updates {
                self.transfer_assign(*site, a, &mut pass)?;
            }
            let joined = join_env(env, &pass);
            if joined == *env {
                break;
            }
            *env = joined;
        }
        self.record = was_recording;
        // One more pass over the stable environment makes the pruning
        // decisions and contradiction reports that the iterations above
        // had to hold back.
        let mut pass = env.clone();
        for v in &bumped {
            pass.insert(v.clone(), Av::Unknown);
        }
        self.walk(body, &mut pass)?;
        for (site, a) in updates {
            self.transfer_assign(*site, a, &mut pass)?;
        }
        for v in &bumped {
            env.insert(v.clone(), Av::Unknown);
        }
        Ok(())
    }
}

/// Removes pruned statements: a pruned `if` is replaced by its (filtered)
/// else-branch, a pruned loop disappears entirely.
fn prune_stmts(stmts: &[Stmt], pruned: &BTreeSet<Label>) -> Vec<Stmt> {
    let mut out = Vec::new();
    for s in stmts {
        if pruned.contains(&s.label) {
            if let StmtKind::If {
                else_branch: Some(els),
                ..
            } = &s.kind
            {
                out.extend(prune_stmts(els, pruned));
            }
            continue;
        }
        let kind = match &s.kind {
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => StmtKind::If {
                cond: cond.clone(),
                then_branch: prune_stmts(then_branch, pruned),
                else_branch: else_branch.as_ref().map(|e| prune_stmts(e, pruned)),
            },
            StmtKind::While { cond, body } => StmtKind::While {
                cond: cond.clone(),
                body: prune_stmts(body, pruned),
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
                body: prune_stmts(body, pruned),
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

pub fn conditioned_slice(
    p: &Program,
    c: &Criterion,
    fixed: &BTreeMap<String, i64>,
) -> Result<ConditionedSlice, CondError> {
    if !p.has_label(c.at) {
        return Err(CondError::UnknownLabel(c.at));
    }
    for v in &c.vars {
        if !p.declares(v) {
            return Err(CondError::UnknownVariable(v.clone()));
        }
    }
    for v in fixed.keys() {
        if !p.declares(v) {
            return Err(CondError::UnknownFixedVariable(v.clone()));
        }
    }

    if fixed.is_empty() {
        let s = backward_slice(p, c).expect("criterion already validated");
        return Ok(ConditionedSlice {
            criterion: c.clone(),
            fixed: fixed.clone(),
            labels: s.labels,
            program: s.program,
            pruned: BTreeSet::new(),
        });
    }

    // First definition site of every variable, in execution order.
    let cfg = build_cfg(p);
    let mut first_def: BTreeMap<String, DefSite> = BTreeMap::new();
    for &n in &cfg.nodes {
        for v in &cfg.facts_of(n).defs {
            first_def.entry(v.clone()).or_insert(n);
        }
    }

    // Scalars start at zero; a fixed variable with no definition at all
    // is fixed from the start.
    let mut env: Env = BTreeMap::new();
    for d in &p.decls {
        for item in &d.items {
            if item.shape == Shape::Scalar {
                let v = match fixed.get(&item.name) {
                    Some(&k) if !first_def.contains_key(&item.name) => Av::Known(k),
                    _ => Av::Known(0),
                };
                env.insert(item.name.clone(), v);
            }
        }
    }

    let mut w = Walker {
        fixed,
        first_def: first_def.clone(),
        pruned: BTreeSet::new(),
        record: true,
    };
    w.walk(&p.body, &mut env)?;

    if w.pruned.contains(&c.at) {
        return Err(CondError::CriterionUnreachable { at: c.at });
    }

    let pruned_program = Program {
        decls: p.decls.clone(),
        body: prune_stmts(&p.body, &w.pruned),
    };
    // The conditioned slice is the static backward slice of the residual
    // program; a fixed variable's `read()` survives only if something in
    // the slice still depends on it, which keeps every conditioned slice
    // inside the corresponding static one.
    let base = backward_slice(&pruned_program, c).expect("criterion survives pruning");

    Ok(ConditionedSlice {
        criterion: c.clone(),
        fixed: fixed.clone(),
        labels: base.labels,
        program: base.program,
        pruned: w.pruned,
    })
}
