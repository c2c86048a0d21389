//! Instrumenting interpreter.
//!
//! Execution produces a [`Trace`]: one [`Event`] per executed node, in
//! order, each recording which earlier events produced the values it
//! read (`uses_from`), which predicate occurrence let it run
//! (`control_from`), and which memory cells it wrote.  Memory cells are
//! tracked per array *element*, so overwriting `a[2]` severs dependence
//! on the previous write to `a[2]` but not to `a[3]`.
//!
//! A `for` statement emits separate events, all under its one label, for
//! each init assignment, each predicate evaluation and each update
//! assignment, mirroring the statement's expanded control-flow nodes.
//! A label's occurrence counter increments once per event.
//!
//! Arithmetic wraps; division and remainder truncate toward zero and
//! fault on a zero divisor.  Scalars and array elements start at zero.
//! Reads that outrun the input yield zero and are counted in
//! [`Trace::exhausted_reads`].

use crate::lang::ast::*;
use std::collections::BTreeMap;
use std::collections::BTreeSet;
use thiserror::Error;

pub const DEFAULT_STEP_LIMIT: u64 = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RuntimeError {
    #[error("division by zero at {at}")]
    DivisionByZero { at: Occurrence },
    #[error("index {index} out of bounds for `{name}` of size {len} at {at}")]
    IndexOutOfBounds {
        at: Occurrence,
        name: String,
        index: i64,
        len: u32,
    },
    #[error("execution exceeded the step limit of {limit}")]
    StepLimitExceeded { limit: u64 },
}

/// A memory cell: a scalar, or one element of an array.
pub type MemKey = (String, Option<i64>);

/// Where a `read()` takes its values from.
#[derive(Debug, Clone)]
pub enum InputSource {
    /// One shared queue consumed left to right.
    Stream(Vec<i64>),
    /// A separate queue per read statement, keyed by its label.  Used to
    /// replay a recorded execution against a sliced program, where
    /// dropped reads must not shift the values seen by surviving ones.
    Channels(BTreeMap<Label, Vec<i64>>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub occ: Occurrence,
    /// Indices of events whose written values this event read.
    pub uses_from: BTreeSet<usize>,
    /// Index of the predicate occurrence this event executed under.
    pub control_from: Option<usize>,
    /// Cells written, with the values stored.
    pub defines: Vec<(MemKey, i64)>,
}

#[derive(Debug, Clone)]
pub struct Trace {
    pub events: Vec<Event>,
    pub outputs: Vec<i64>,
    /// Number of `read()` executions that found no input left.
    pub exhausted_reads: u64,
    /// Values each read statement consumed, in execution order — the
    /// recording replayed through [`InputSource::Channels`].
    pub reads_by_label: BTreeMap<Label, Vec<i64>>,
    pub final_scalars: BTreeMap<String, i64>,
    pub final_arrays: BTreeMap<String, Vec<i64>>,
}

impl Trace {
    /// Event indices of a label, in execution order.
    pub fn events_of(&self, l: Label) -> Vec<usize> {
        self.events
            .iter()
            .enumerate()
            .filter(|(_, e)| e.occ.label == l)
            .map(|(i, _)| i)
            .collect()
    }

    /// Index of the k-th (1-based) event of a label.
    pub fn event_at(&self, occ: Occurrence) -> Option<usize> {
        self.events
            .iter()
            .position(|e| e.occ == occ)
    }

    /// Value of `cell` as seen on entry to event `idx`: the value written
    /// by the closest earlier definition, or zero.
    pub fn value_before(&self, idx: usize, cell: &MemKey) -> i64 {
        self.events[..idx]
            .iter()
            .rev()
            .find_map(|e| {
                e.defines
                    .iter()
                    .rev()
                    .find(|(k, _)| k == cell)
                    .map(|&(_, v)| v)
            })
            .unwrap_or(0)
    }
}

enum InputState {
    Stream { values: Vec<i64>, pos: usize },
    Channels { chans: BTreeMap<Label, (Vec<i64>, usize)> },
}

impl InputState {
    fn next(&mut self, at: Label) -> Option<i64> {
        match self {
            InputState::Stream { values, pos } => {
                let v = values.get(*pos).copied();
                if v.is_some() {
                    *pos += 1;
                }
                v
            }
            InputState::Channels { chans } => {
                let (values, pos) = chans.entry(at).or_default();
                let v = values.get(*pos).copied();
                if v.is_some() {
                    *pos += 1;
                }
                v
            }
        }
    }
}

/// Scratch for the event being executed.
struct EventBuild {
    idx: usize,
    occ: Occurrence,
    uses: BTreeSet<usize>,
    defines: Vec<(MemKey, i64)>,
}

struct Interp {
    scalars: BTreeMap<String, i64>,
    arrays: BTreeMap<String, Vec<i64>>,
    last_def: BTreeMap<MemKey, usize>,
    events: Vec<Event>,
    occ_count: BTreeMap<Label, u32>,
    input: InputState,
    outputs: Vec<i64>,
    reads_by_label: BTreeMap<Label, Vec<i64>>,
    exhausted_reads: u64,
    steps: u64,
    limit: u64,
}

pub fn run(p: &Program, input: InputSource, step_limit: u64) -> Result<Trace, RuntimeError> {
    run_seeded(p, input, step_limit, &BTreeMap::new(), &BTreeMap::new())
}

/// Like [`run`], but with memory preloaded before the first statement:
/// seeded scalars and array elements take the given values instead of
/// zero.  Seeds for undeclared names are ignored; array seeds longer than
/// the declared size are truncated.
pub fn run_seeded(
    p: &Program,
    input: InputSource,
    step_limit: u64,
    scalar_seed: &BTreeMap<String, i64>,
    array_seed: &BTreeMap<String, Vec<i64>>,
) -> Result<Trace, RuntimeError> {
    let mut scalars = BTreeMap::new();
    let mut arrays = BTreeMap::new();
    for d in &p.decls {
        for item in &d.items {
            match item.shape {
                Shape::Scalar => {
                    let v = scalar_seed.get(&item.name).copied().unwrap_or(0);
                    scalars.insert(item.name.clone(), v);
                }
                Shape::Array(n) => {
                    let mut cells = vec![0i64; n as usize];
                    if let Some(seed) = array_seed.get(&item.name) {
                        for (slot, v) in cells.iter_mut().zip(seed) {
                            *slot = *v;
                        }
                    }
                    arrays.insert(item.name.clone(), cells);
                }
            }
        }
    }
    let input = match input {
        InputSource::Stream(values) => InputState::Stream { values, pos: 0 },
        InputSource::Channels(map) => InputState::Channels {
            chans: map.into_iter().map(|(l, v)| (l, (v, 0))).collect(),
        },
    };
    let mut interp = Interp {
        scalars,
        arrays,
        last_def: BTreeMap::new(),
        events: Vec::new(),
        occ_count: BTreeMap::new(),
        input,
        outputs: Vec::new(),
        reads_by_label: BTreeMap::new(),
        exhausted_reads: 0,
        steps: 0,
        limit: step_limit,
    };
    interp.exec_stmts(&p.body, None)?;
    Ok(Trace {
        events: interp.events,
        outputs: interp.outputs,
        exhausted_reads: interp.exhausted_reads,
        reads_by_label: interp.reads_by_label,
        final_scalars: interp.scalars,
        final_arrays: interp.arrays,
    })
}

impl Interp {
    fn begin_event(&mut self, label: Label) -> Result<EventBuild, RuntimeError> {
        self.steps += 1;
        if self.steps > self.limit {
            return Err(RuntimeError::StepLimitExceeded { limit: self.limit });
        }
        let k = self.occ_count.entry(label).or_insert(0);
        *k += 1;
        Ok(EventBuild {
            idx: self.events.len(),
            occ: Occurrence { label, k: *k },
            uses: BTreeSet::new(),
            defines: Vec::new(),
        })
    }

    fn finish_event(&mut self, ev: EventBuild, control_from: Option<usize>) -> usize {
        debug_assert_eq!(ev.idx, self.events.len());
        self.events.push(Event {
            occ: ev.occ,
            uses_from: ev.uses,
            control_from,
            defines: ev.defines,
        });
        ev.idx
    }

    fn read_cell(&mut self, cell: &MemKey, ev: &mut EventBuild) -> i64 {
        if let Some(&d) = self.last_def.get(cell) {
            if d != ev.idx {
                ev.uses.insert(d);
            }
        }
        match cell {
            (name, None) => self.scalars.get(name).copied().unwrap_or(0),
            (name, Some(i)) => self
                .arrays
                .get(name)
                .and_then(|a| a.get(*i as usize))
                .copied()
                .unwrap_or(0),
        }
    }

    fn write_cell(&mut self, cell: MemKey, value: i64, ev: &mut EventBuild) {
        match &cell {
            (name, None) => {
                self.scalars.insert(name.clone(), value);
            }
            (name, Some(i)) => {
                if let Some(a) = self.arrays.get_mut(name) {
                    if let Some(slot) = a.get_mut(*i as usize) {
                        *slot = value;
                    }
                }
            }
        }
        self.last_def.insert(cell.clone(), ev.idx);
        ev.defines.push((cell, value));
    }

    fn cell_of(&mut self, lv: &LValue, ev: &mut EventBuild) -> Result<MemKey, RuntimeError> {
        match lv {
            LValue::Var(n) => Ok((n.clone(), None)),
            LValue::Elem(n, idx) => {
                let i = self.eval(idx, ev)?;
                let len = self.arrays.get(n).map(|a| a.len()).unwrap_or(0) as u32;
                if i < 0 || i >= len as i64 {
                    return Err(RuntimeError::IndexOutOfBounds {
                        at: ev.occ,
                        name: n.clone(),
                        index: i,
                        len,
                    });
                }
                Ok((n.clone(), Some(i)))
            }
        }
    }

    fn eval(&mut self, e: &Expr, ev: &mut EventBuild) -> Result<i64, RuntimeError> {
        match e {
            Expr::Int(v) => Ok(*v),
            Expr::LValue(lv) => {
                let cell = self.cell_of(lv, ev)?;
                Ok(self.read_cell(&cell, ev))
            }
            Expr::Unary(UnOp::Neg, inner) => Ok(self.eval(inner, ev)?.wrapping_neg()),
            Expr::Unary(UnOp::Not, inner) => Ok((self.eval(inner, ev)? == 0) as i64),
            Expr::IncDec { op, prefix, target } => {
                let cell = self.cell_of(target, ev)?;
                let old = self.read_cell(&cell, ev);
                let new = match op {
                    IncDecOp::Inc => old.wrapping_add(1),
                    IncDecOp::Dec => old.wrapping_sub(1),
                };
                self.write_cell(cell, new, ev);
                Ok(if *prefix { new } else { old })
            }
            Expr::Binary(op, l, r) => {
                let lv = self.eval(l, ev)?;
                match op {
                    BinOp::And => {
                        if lv == 0 {
                            return Ok(0);
                        }
                        return Ok((self.eval(r, ev)? != 0) as i64);
                    }
                    BinOp::Or => {
                        if lv != 0 {
                            return Ok(1);
                        }
                        return Ok((self.eval(r, ev)? != 0) as i64);
                    }
                    _ => {}
                }
                let rv = self.eval(r, ev)?;
                Ok(match op {
                    BinOp::Add => lv.wrapping_add(rv),
                    BinOp::Sub => lv.wrapping_sub(rv),
                    BinOp::Mul => lv.wrapping_mul(rv),
                    BinOp::Div | BinOp::Mod if rv == 0 => {
                        return Err(RuntimeError::DivisionByZero { at: ev.occ })
                    }
                    BinOp::Div => lv.wrapping_div(rv),
                    BinOp::Mod => lv.wrapping_rem(rv),
                    BinOp::Lt => (lv < rv) as i64,
                    BinOp::Le => (lv <= rv) as i64,
                    BinOp::Gt => (lv > rv) as i64,
                    BinOp::Ge => (lv >= rv) as i64,
                    BinOp::Eq => (lv == rv) as i64,
                    BinOp::Ne => (lv != rv) as i64,
                    BinOp::And | BinOp::Or => unreachable!("handled above"),
                })
            }
        }
    }

    fn exec_assign(
        &mut self,
        a: &Assign,
        ev: &mut EventBuild,
    ) -> Result<(), RuntimeError> {
        match a {
            Assign::Set { target, op, value } => {
                let rhs = self.eval(value, ev)?;
                let cell = self.cell_of(target, ev)?;
                let new = match op {
                    AssignOp::Set => rhs,
                    AssignOp::Add | AssignOp::Sub | AssignOp::Mul | AssignOp::Div => {
                        let old = self.read_cell(&cell, ev);
                        match op {
                            AssignOp::Add => old.wrapping_add(rhs),
                            AssignOp::Sub => old.wrapping_sub(rhs),
                            AssignOp::Mul => old.wrapping_mul(rhs),
                            AssignOp::Div if rhs == 0 => {
                                return Err(RuntimeError::DivisionByZero { at: ev.occ })
                            }
                            AssignOp::Div => old.wrapping_div(rhs),
                            AssignOp::Set => unreachable!(),
                        }
                    }
                };
                self.write_cell(cell, new, ev);
                Ok(())
            }
            Assign::IncDec { target, op, .. } => {
                let cell = self.cell_of(target, ev)?;
                let old = self.read_cell(&cell, ev);
                let new = match op {
                    IncDecOp::Inc => old.wrapping_add(1),
                    IncDecOp::Dec => old.wrapping_sub(1),
                };
                self.write_cell(cell, new, ev);
                Ok(())
            }
        }
    }

    fn exec_stmts(
        &mut self,
        stmts: &[Stmt],
        parent: Option<usize>,
    ) -> Result<(), RuntimeError> {
        for s in stmts {
            self.exec_stmt(s, parent)?;
        }
        Ok(())
    }

    fn exec_stmt(&mut self, s: &Stmt, parent: Option<usize>) -> Result<(), RuntimeError> {
        match &s.kind {
            StmtKind::Assign(a) => {
                let mut ev = self.begin_event(s.label)?;
                self.exec_assign(a, &mut ev)?;
                self.finish_event(ev, parent);
            }
            StmtKind::MultiAssign { targets, value } => {
                let mut ev = self.begin_event(s.label)?;
                let v = self.eval(value, &mut ev)?;
                for t in targets.iter().rev() {
                    let cell = self.cell_of(t, &mut ev)?;
                    self.write_cell(cell, v, &mut ev);
                }
                self.finish_event(ev, parent);
            }
            StmtKind::Read(lv) => {
                let mut ev = self.begin_event(s.label)?;
                let v = match self.input.next(s.label) {
                    Some(v) => v,
                    None => {
                        self.exhausted_reads += 1;
                        0
                    }
                };
                self.reads_by_label.entry(s.label).or_default().push(v);
                let cell = self.cell_of(lv, &mut ev)?;
                self.write_cell(cell, v, &mut ev);
                self.finish_event(ev, parent);
            }
            StmtKind::Print(e) => {
                let mut ev = self.begin_event(s.label)?;
                let v = self.eval(e, &mut ev)?;
                self.outputs.push(v);
                self.finish_event(ev, parent);
            }
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                let mut ev = self.begin_event(s.label)?;
                let c = self.eval(cond, &mut ev)?;
                let idx = self.finish_event(ev, parent);
                if c != 0 {
                    self.exec_stmts(then_branch, Some(idx))?;
                } else if let Some(els) = else_branch {
                    self.exec_stmts(els, Some(idx))?;
                }
            }
            StmtKind::While { cond, body } => {
                let mut governing = parent;
                loop {
                    let mut ev = self.begin_event(s.label)?;
                    let c = self.eval(cond, &mut ev)?;
                    let idx = self.finish_event(ev, governing);
                    if c == 0 {
                        break;
                    }
                    self.exec_stmts(body, Some(idx))?;
                    // The next predicate test runs because this one passed.
                    governing = Some(idx);
                }
            }
            StmtKind::For {
                init,
                cond,
                update,
                body,
            } => {
                for a in init {
                    let mut ev = self.begin_event(s.label)?;
                    self.exec_assign(a, &mut ev)?;
                    self.finish_event(ev, parent);
                }
                let mut governing = parent;
                loop {
                    let mut ev = self.begin_event(s.label)?;
                    let c = self.eval(cond, &mut ev)?;
                    let idx = self.finish_event(ev, governing);
                    if c == 0 {
                        break;
                    }
                    self.exec_stmts(body, Some(idx))?;
                    for a in update {
                        let mut ev = self.begin_event(s.label)?;
                        self.exec_assign(a, &mut ev)?;
                        self.finish_event(ev, Some(idx));
                    }
                    governing = Some(idx);
                }
            }
        }
        Ok(())
    }
}
