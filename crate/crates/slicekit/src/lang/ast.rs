//! Abstract syntax for MiniJ programs.
//!
//! Every executable statement and declaration carries a [`Label`]: a
//! positive integer assigned in source order.  Labels are the currency of
//! the whole toolkit — slices, dependence graphs and criteria all speak in
//! labels.  A `for` statement owns a single label covering its entire
//! header (init list, predicate, update list); the analyses expand the
//! header internally where finer granularity is needed.

use std::fmt;

/// Statement label: position of a statement in source order, starting at 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label(pub u32);

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A single occurrence of a statement during execution: the k-th time the
/// statement at `label` runs, counting from 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Occurrence {
    pub label: Label,
    pub k: u32,
}

impl fmt::Display for Occurrence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}^{}", self.label, self.k)
    }
}

/// Declared shape of a variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Scalar,
    /// Fixed-size integer array, e.g. `int a[25];`.
    Array(u32),
}

/// One name inside a declaration statement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeclItem {
    pub name: String,
    pub shape: Shape,
}

/// A declaration statement (`int a[25], i, sum;`).  Declarations are
/// labeled like any other statement but define and use nothing; slicing
/// always retains them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decl {
    pub label: Label,
    pub items: Vec<DeclItem>,
}

/// Assignment target: a scalar variable or one array element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LValue {
    Var(String),
    Elem(String, Box<Expr>),
}

impl LValue {
    pub fn name(&self) -> &str {
        match self {
            LValue::Var(n) | LValue::Elem(n, _) => n,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IncDecOp {
    Inc,
    Dec,
}

/// Integer expression.  `IncDec` covers `++i` / `i--` appearing *inside*
/// an expression (e.g. `a[++i]`); it both reads and writes its target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Int(i64),
    LValue(LValue),
    Unary(UnOp, Box<Expr>),
    IncDec {
        op: IncDecOp,
        prefix: bool,
        target: LValue,
    },
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::LValue(LValue::Var(name.to_string()))
    }

    /// True when evaluating the expression cannot write to any variable,
    /// i.e. it contains no `++`/`--`.
    pub fn is_pure(&self) -> bool {
        match self {
            Expr::Int(_) => true,
            Expr::LValue(lv) => lv_is_pure(lv),
            Expr::Unary(_, e) => e.is_pure(),
            Expr::IncDec { .. } => false,
            Expr::Binary(_, l, r) => l.is_pure() && r.is_pure(),
        }
    }
}

fn lv_is_pure(lv: &LValue) -> bool {
    match lv {
        LValue::Var(_) => true,
        LValue::Elem(_, idx) => idx.is_pure(),
    }
}

/// Compound assignment operators; `Set` is plain `=`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssignOp {
    Set,
    Add,
    Sub,
    Mul,
    Div,
}

/// One assignment as it appears in an assignment position (statement,
/// for-init or for-update).  Normalization reduces every variant to
/// `Set { op: AssignOp::Set, .. }` except chains, which it splits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Assign {
    Set {
        target: LValue,
        op: AssignOp,
        value: Expr,
    },
    /// Standalone `++x` / `x--` used as an assignment.
    IncDec {
        target: LValue,
        op: IncDecOp,
        prefix: bool,
    },
}

impl Assign {
    pub fn set(target: LValue, value: Expr) -> Assign {
        Assign::Set {
            target,
            op: AssignOp::Set,
            value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StmtKind {
    Assign(Assign),
    /// Chained `i = pprod = nprod = 1;` before normalization splits it.
    MultiAssign { targets: Vec<LValue>, value: Expr },
    /// `lvalue = read();`
    Read(LValue),
    Print(Expr),
    If {
        cond: Expr,
        then_branch: Vec<Stmt>,
        else_branch: Option<Vec<Stmt>>,
    },
    While {
        cond: Expr,
        body: Vec<Stmt>,
    },
    For {
        init: Vec<Assign>,
        cond: Expr,
        update: Vec<Assign>,
        body: Vec<Stmt>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stmt {
    pub label: Label,
    pub kind: StmtKind,
}

/// A parsed MiniJ program: declarations first, then the statement body.
/// Labels are consecutive positive integers over declarations and
/// statements in source order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub decls: Vec<Decl>,
    pub body: Vec<Stmt>,
}

impl Program {
    /// All labels in ascending order (declarations included).
    pub fn labels(&self) -> Vec<Label> {
        let mut out: Vec<Label> = self.decls.iter().map(|d| d.label).collect();
        visit_stmts(&self.body, &mut |s| out.push(s.label));
        out.sort();
        out
    }

    pub fn decl_labels(&self) -> Vec<Label> {
        self.decls.iter().map(|d| d.label).collect()
    }

    pub fn max_label(&self) -> u32 {
        self.labels().last().map(|l| l.0).unwrap_or(0)
    }

    /// Looks up the statement with the given label, if any (declarations
    /// are not statements).
    pub fn stmt(&self, label: Label) -> Option<&Stmt> {
        fn find(stmts: &[Stmt], label: Label) -> Option<&Stmt> {
            for s in stmts {
                if s.label == label {
                    return Some(s);
                }
                let hit = match &s.kind {
                    StmtKind::If {
                        then_branch,
                        else_branch,
                        ..
                    } => find(then_branch, label)
                        .or_else(|| else_branch.as_deref().and_then(|e| find(e, label))),
                    StmtKind::While { body, .. } | StmtKind::For { body, .. } => {
                        find(body, label)
                    }
                    _ => None,
                };
                if hit.is_some() {
                    return hit;
                }
            }
            None
        }
        find(&self.body, label)
    }

    pub fn has_label(&self, label: Label) -> bool {
        self.decls.iter().any(|d| d.label == label) || self.stmt(label).is_some()
    }

    pub fn shape_of(&self, name: &str) -> Option<Shape> {
        self.decls
            .iter()
            .flat_map(|d| d.items.iter())
            .find(|it| it.name == name)
            .map(|it| it.shape)
    }

    pub fn declares(&self, name: &str) -> bool {
        self.shape_of(name).is_some()
    }

    /// True once every assignment is a plain `=` with no chained targets
    /// and no standalone `++`/`--`; the form `normalize` guarantees.
    pub fn is_normal_form(&self) -> bool {
        let mut ok = true;
        visit_stmts(&self.body, &mut |s| match &s.kind {
            StmtKind::MultiAssign { .. } => ok = false,
            StmtKind::Assign(a) => ok &= assign_is_normal(a),
            StmtKind::For { init, update, .. } => {
                ok &= init.iter().all(assign_is_normal);
                ok &= update.iter().all(assign_is_normal);
            }
            _ => {}
        });
        ok
    }
}

fn assign_is_normal(a: &Assign) -> bool {
    matches!(
        a,
        Assign::Set {
            op: AssignOp::Set,
            ..
        }
    )
}

/// Depth-first visit of every statement, predicates included, in source
/// order.
pub fn visit_stmts<'a, F: FnMut(&'a Stmt)>(stmts: &'a [Stmt], f: &mut F) {
    for s in stmts {
        f(s);
        match &s.kind {
            StmtKind::If {
                then_branch,
                else_branch,
                ..
            } => {
                visit_stmts(then_branch, f);
                if let Some(e) = else_branch {
                    visit_stmts(e, f);
                }
            }
            StmtKind::While { body, .. } => visit_stmts(body, f),
            StmtKind::For { body, .. } => visit_stmts(body, f),
            _ => {}
        }
    }
}
