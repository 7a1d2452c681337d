use std::fmt;

use thiserror::Error;

use super::lower::{lower_unit, Code, IExpr, IKind, IStmt, MemberRef, SKind, SlotTy};
use super::stdlib::{ftrig_step, pid_step, rtrig_step, tof_step, ton_step, PidState, TimerState, TrigState};
use super::value::Value;
use crate::diag;
use crate::sema::{check_unit, Builtin, StdFb};
use crate::syntax::ast::{BinaryOp, ElementaryType, PouKind, SourceUnit, VarKind};
use crate::syntax::span::SourceSpan;

pub const DEFAULT_CYCLE_MS: i64 = 100;

/// Loop iterations allowed in one scan before the watchdog trips.
pub const LOOP_LIMIT: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrapKind {
    DivisionByZero,
    Overflow,
    NotFinite,
    InvalidArgument,
    Watchdog,
    /// A value of the wrong type reached an operation. Never raised for
    /// programs that pass the checker.
    TypeFault,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trap {
    pub kind: TrapKind,
    pub message: String,
    /// Statement being executed.
    pub span: SourceSpan,
    pub scan: u64,
}

impl fmt::Display for Trap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "trap at scan {} ({}): {}", self.scan, self.span, self.message)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum InstantiateError {
    #[error("unknown POU '{0}'")]
    UnknownPou(String),
    #[error("unit has {0} error(s)")]
    UnitHasErrors(usize),
    #[error("cycle time must be positive, got {0} ms")]
    BadCycle(i64),
    #[error("initializer of '{name}': {message}")]
    Initializer { name: String, message: String },
}

#[derive(Debug, Error, PartialEq)]
pub enum ExecError {
    #[error("{0}")]
    Trap(Trap),
    #[error("runtime is frozen after {0}")]
    Frozen(Trap),
    #[error("override '{name}': {reason}")]
    Override { name: String, reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct StdInstance {
    pub fb: StdFb,
    pub inputs: Vec<Value>,
    pub outputs: Vec<Value>,
    pub state: StdState,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum StdState {
    Pid(PidState),
    Timer(TimerState),
    Trig(TrigState),
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Slot {
    Val(Value),
    Std(Box<StdInstance>),
    User(Box<Frame>),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub(crate) struct Frame {
    pub slots: Vec<Slot>,
    /// Code table index for user block instances.
    pub code: Option<usize>,
}

impl StdInstance {
    fn new(fb: StdFb) -> Self {
        let inputs = fb
            .inputs()
            .iter()
            .map(|(name, ty)| match (*name, fb) {
                ("KP", StdFb::Pid) => Value::Real(1.0),
                ("OUT_MAX", StdFb::Pid) => Value::Real(100.0),
                _ => Value::default_for(*ty),
            })
            .collect();
        let outputs = fb.outputs().iter().map(|(_, ty)| Value::default_for(*ty)).collect();
        let state = match fb {
            StdFb::Pid => StdState::Pid(PidState::new(1.0, 0.0, 0.0, 0.0, 100.0)),
            StdFb::Ton | StdFb::Tof => StdState::Timer(TimerState::default()),
            StdFb::RTrig | StdFb::FTrig => StdState::Trig(TrigState::default()),
        };
        StdInstance {
            fb,
            inputs,
            outputs,
            state,
        }
    }

    /// Run the block with its current inputs.
    fn step(&mut self, now: i64, cycle_ms: i64) -> Result<(), Fault> {
        let b = |v: &Value| v.as_bool().unwrap_or(false);
        match (&mut self.state, self.fb) {
            (StdState::Pid(state), _) => {
                let (low, high) = (self.inputs[5].as_f64().unwrap_or(0.0), self.inputs[6].as_f64().unwrap_or(0.0));
                if !(low < high) {
                    return Err(Fault::trap(
                        TrapKind::InvalidArgument,
                        format!("PID limits require OUT_MIN < OUT_MAX, got {low} and {high}"),
                    ));
                }
                state.kp = self.inputs[2].as_f64().unwrap_or(0.0);
                state.ki = self.inputs[3].as_f64().unwrap_or(0.0);
                state.kd = self.inputs[4].as_f64().unwrap_or(0.0);
                state.low = low;
                state.high = high;
                let out = if b(&self.inputs[7]) {
                    state.reset();
                    0.0f64.clamp(low, high)
                } else {
                    let sp = self.inputs[0].as_f64().unwrap_or(0.0);
                    let pv = self.inputs[1].as_f64().unwrap_or(0.0);
                    let (out, next) = pid_step(state, sp, pv, cycle_ms);
                    *state = next;
                    out
                };
                if !out.is_finite() {
                    return Err(Fault::trap(TrapKind::NotFinite, "PID output is not finite".into()));
                }
                self.outputs[0] = Value::Real(out);
            }
            (StdState::Timer(state), fb) => {
                let input = b(&self.inputs[0]);
                state.pt = self.inputs[1].as_int().unwrap_or(0);
                *state = if fb == StdFb::Ton {
                    ton_step(state, input, now)
                } else {
                    tof_step(state, input, now)
                };
                self.outputs[0] = Value::Bool(state.q);
                self.outputs[1] = Value::Time(state.et);
            }
            (StdState::Trig(state), fb) => {
                let clk = b(&self.inputs[0]);
                *state = if fb == StdFb::RTrig {
                    rtrig_step(*state, clk)
                } else {
                    ftrig_step(*state, clk)
                };
                self.outputs[0] = Value::Bool(state.q);
            }
        }
        Ok(())
    }
}

/// Failure inside expression or statement evaluation, before the statement
/// span is attached.
#[derive(Debug)]
pub(crate) enum Fault {
    Raw(TrapKind, String),
    Located(Trap),
}

impl Fault {
    fn trap(kind: TrapKind, message: String) -> Fault {
        Fault::Raw(kind, message)
    }

    fn type_fault(what: &str) -> Fault {
        Fault::Raw(TrapKind::TypeFault, format!("type fault: {what}"))
    }
}

type EResult<T> = Result<T, Fault>;

fn overflow(ty: ElementaryType) -> Fault {
    Fault::trap(TrapKind::Overflow, format!("{ty} overflow"))
}

/// Store-compatible conversion: identity or numeric widening, with range
/// checks on integer targets.
fn coerce(v: Value, ty: ElementaryType) -> EResult<Value> {
    use ElementaryType as T;
    match (v, ty) {
        (Value::Int(x) | Value::Dint(x), T::Int | T::Dint) => Value::int_of(ty, x).ok_or_else(|| overflow(ty)),
        (Value::Int(x) | Value::Dint(x), T::Real) => Ok(Value::Real(x as f64)),
        (v, ty) if v.ty() == ty => Ok(v),
        (v, ty) => Err(Fault::type_fault(&format!("cannot store {} as {ty}", v.ty()))),
    }
}

fn real_result(v: f64) -> EResult<Value> {
    if v.is_finite() {
        Ok(Value::Real(v))
    } else {
        Err(Fault::trap(TrapKind::NotFinite, "REAL result is not finite".into()))
    }
}

fn int_result(ty: ElementaryType, v: Option<i64>) -> EResult<Value> {
    v.and_then(|v| Value::int_of(ty, v)).ok_or_else(|| overflow(ty))
}

fn as_real(v: &Value) -> EResult<f64> {
    v.as_f64().ok_or_else(|| Fault::type_fault("number expected"))
}

fn as_int(v: &Value) -> EResult<i64> {
    match v {
        Value::Int(x) | Value::Dint(x) => Ok(*x),
        _ => Err(Fault::type_fault("integer expected")),
    }
}

fn as_bool(v: &Value) -> EResult<bool> {
    v.as_bool().ok_or_else(|| Fault::type_fault("BOOL expected"))
}

fn convert(v: Value, from: ElementaryType, to: ElementaryType) -> EResult<Value> {
    use ElementaryType as T;
    let v = coerce(v, from)?;
    let round = |x: f64| -> EResult<i64> {
        let r = x.round();
        if r >= i64::MIN as f64 && r < i64::MAX as f64 {
            Ok(r as i64)
        } else {
            Err(overflow(to))
        }
    };
    let raw: EResult<i64> = match &v {
        Value::Bool(b) => Ok(*b as i64),
        Value::Int(x) | Value::Dint(x) | Value::Time(x) => Ok(*x),
        Value::Real(x) => round(*x),
        Value::String(_) => Err(Fault::type_fault("STRING conversion")),
    };
    match to {
        T::Bool => Ok(Value::Bool(match v {
            Value::Real(x) => x != 0.0,
            _ => raw? != 0,
        })),
        T::Int | T::Dint => int_result(to, Some(raw?)),
        T::Time => Ok(Value::Time(raw?)),
        T::Real => match v {
            Value::Real(x) => Ok(Value::Real(x)),
            _ => Ok(Value::Real(raw? as f64)),
        },
        T::String => Err(Fault::type_fault("STRING conversion")),
    }
}

/// Evaluate a constant initializer.
fn eval_constant(e: &IExpr, ty: ElementaryType) -> EResult<Value> {
    let empty = Frame::default();
    let codes: [Code; 0] = [];
    let mut m = Machine {
        codes: &codes,
        now: 0,
        cycle_ms: DEFAULT_CYCLE_MS,
        iterations: 0,
    };
    let v = m.eval(&empty, e)?;
    coerce(v, ty)
}

enum Flow {
    Normal,
    Exit,
    Return,
}

struct Machine<'a> {
    codes: &'a [Code],
    now: i64,
    cycle_ms: i64,
    iterations: u64,
}

impl Machine<'_> {
    fn block(&mut self, frame: &mut Frame, stmts: &[IStmt]) -> Result<Flow, Trap> {
        for s in stmts {
            match self.stmt(frame, s) {
                Ok(Flow::Normal) => {}
                Ok(flow) => return Ok(flow),
                Err(Fault::Located(t)) => return Err(t),
                Err(Fault::Raw(kind, message)) => {
                    return Err(Trap {
                        kind,
                        message,
                        span: s.span,
                        scan: 0,
                    })
                }
            }
        }
        Ok(Flow::Normal)
    }

    fn nested(&mut self, frame: &mut Frame, stmts: &[IStmt]) -> EResult<Flow> {
        self.block(frame, stmts).map_err(Fault::Located)
    }

    fn tick(&mut self) -> EResult<()> {
        self.iterations += 1;
        if self.iterations > LOOP_LIMIT {
            return Err(Fault::trap(
                TrapKind::Watchdog,
                format!("loop iteration limit of {LOOP_LIMIT} per scan exceeded"),
            ));
        }
        Ok(())
    }

    fn stmt(&mut self, frame: &mut Frame, s: &IStmt) -> EResult<Flow> {
        match &s.kind {
            SKind::Assign { slot, ty, value } => {
                let v = coerce(self.eval(frame, value)?, *ty)?;
                frame.slots[*slot] = Slot::Val(v);
            }
            SKind::If { branches, else_body } => {
                for (cond, body) in branches {
                    if as_bool(&self.eval(frame, cond)?)? {
                        return self.nested(frame, body);
                    }
                }
                return self.nested(frame, else_body);
            }
            SKind::Case { selector, arms, else_body } => {
                let v = as_int(&self.eval(frame, selector)?)?;
                for (labels, body) in arms {
                    if labels.iter().any(|l| l.matches(v)) {
                        return self.nested(frame, body);
                    }
                }
                return self.nested(frame, else_body);
            }
            SKind::For { slot, ty, from, to, by, body } => {
                let start = coerce(self.eval(frame, from)?, *ty)?;
                let end = as_int(&self.eval(frame, to)?)?;
                let step = match by {
                    Some(e) => as_int(&self.eval(frame, e)?)?,
                    None => 1,
                };
                if step == 0 {
                    return Err(Fault::trap(TrapKind::InvalidArgument, "FOR step is zero".into()));
                }
                frame.slots[*slot] = Slot::Val(start);
                loop {
                    let i = as_int(&load(frame, *slot)?)?;
                    if (step > 0 && i > end) || (step < 0 && i < end) {
                        break;
                    }
                    self.tick()?;
                    match self.nested(frame, body)? {
                        Flow::Exit => break,
                        Flow::Return => return Ok(Flow::Return),
                        Flow::Normal => {}
                    }
                    let i = as_int(&load(frame, *slot)?)?;
                    frame.slots[*slot] = Slot::Val(int_result(*ty, i.checked_add(step))?);
                }
            }
            SKind::While { cond, body } => {
                while as_bool(&self.eval(frame, cond)?)? {
                    self.tick()?;
                    match self.nested(frame, body)? {
                        Flow::Exit => break,
                        Flow::Return => return Ok(Flow::Return),
                        Flow::Normal => {}
                    }
                }
            }
            SKind::Repeat { body, until } => loop {
                self.tick()?;
                match self.nested(frame, body)? {
                    Flow::Exit => break,
                    Flow::Return => return Ok(Flow::Return),
                    Flow::Normal => {}
                }
                if as_bool(&self.eval(frame, until)?)? {
                    break;
                }
            },
            SKind::InvokeStd { slot, inputs, outputs } => {
                let values = inputs
                    .iter()
                    .map(|(i, e)| Ok((*i, self.eval(frame, e)?)))
                    .collect::<EResult<Vec<_>>>()?;
                let Slot::Std(inst) = &mut frame.slots[*slot] else {
                    return Err(Fault::type_fault("standard block instance expected"));
                };
                for (i, v) in values {
                    let ty = inst.fb.inputs()[i].1;
                    inst.inputs[i] = coerce(v, ty)?;
                }
                inst.step(self.now, self.cycle_ms)?;
                let results: Vec<(usize, Value, ElementaryType)> = outputs
                    .iter()
                    .map(|(o, dst, ty)| (*dst, inst.outputs[*o].clone(), *ty))
                    .collect();
                for (dst, v, ty) in results {
                    frame.slots[dst] = Slot::Val(coerce(v, ty)?);
                }
            }
            SKind::InvokeUser { slot, inputs, in_outs, outputs } => {
                let values = inputs
                    .iter()
                    .map(|(cs, ty, e)| Ok((*cs, coerce(self.eval(frame, e)?, *ty)?)))
                    .collect::<EResult<Vec<_>>>()?;
                let refs = in_outs
                    .iter()
                    .map(|(cs, src)| Ok((*cs, load(frame, *src)?)))
                    .collect::<EResult<Vec<_>>>()?;
                let code_idx = match &self.codes_slot_ty(frame, *slot) {
                    Some(i) => *i,
                    None => return Err(Fault::type_fault("function block instance expected")),
                };
                let Slot::User(callee) = &mut frame.slots[*slot] else {
                    return Err(Fault::type_fault("function block instance expected"));
                };
                for (cs, v) in values.into_iter().chain(refs) {
                    callee.slots[cs] = Slot::Val(v);
                }
                let code = &self.codes[code_idx];
                self.nested(callee, &code.body)?;
                let back: Vec<(usize, Value)> = in_outs
                    .iter()
                    .map(|(cs, dst)| Ok((*dst, load(callee, *cs)?)))
                    .collect::<EResult<Vec<_>>>()?;
                let outs: Vec<(usize, Value, ElementaryType)> = outputs
                    .iter()
                    .map(|(cs, dst, ty)| Ok((*dst, load(callee, *cs)?, *ty)))
                    .collect::<EResult<Vec<_>>>()?;
                for (dst, v) in back {
                    frame.slots[dst] = Slot::Val(v);
                }
                for (dst, v, ty) in outs {
                    frame.slots[dst] = Slot::Val(coerce(v, ty)?);
                }
            }
            SKind::Exit => return Ok(Flow::Exit),
            SKind::Return => return Ok(Flow::Return),
        }
        Ok(Flow::Normal)
    }

    fn codes_slot_ty(&self, frame: &Frame, slot: usize) -> Option<usize> {
        match frame.slots.get(slot) {
            Some(Slot::User(f)) => f.code,
            _ => None,
        }
    }

    fn eval(&mut self, frame: &Frame, e: &IExpr) -> EResult<Value> {
        match &e.kind {
            IKind::Const(v) => Ok(v.clone()),
            IKind::Load(slot) => load(frame, *slot),
            IKind::Member { inst, member } => match (&frame.slots[*inst], member) {
                (Slot::Std(s), MemberRef::Std(i)) => Ok(s.outputs[*i].clone()),
                (Slot::User(f), MemberRef::User(i)) => load(f, *i),
                _ => Err(Fault::type_fault("instance member")),
            },
            IKind::Neg(inner, ty) => {
                let v = self.eval(frame, inner)?;
                match ty {
                    ElementaryType::Real => real_result(-as_real(&v)?),
                    _ => int_result(*ty, as_int(&v)?.checked_neg()),
                }
            }
            IKind::Not(inner) => Ok(Value::Bool(!as_bool(&self.eval(frame, inner)?)?)),
            IKind::Logic { op, lhs, rhs } => {
                let l = as_bool(&self.eval(frame, lhs)?)?;
                match op {
                    BinaryOp::And if !l => return Ok(Value::Bool(false)),
                    BinaryOp::Or if l => return Ok(Value::Bool(true)),
                    _ => {}
                }
                let r = as_bool(&self.eval(frame, rhs)?)?;
                Ok(Value::Bool(match op {
                    BinaryOp::Xor => l != r,
                    _ => r,
                }))
            }
            IKind::Compare { op, ty, lhs, rhs } => {
                let l = self.eval(frame, lhs)?;
                let r = self.eval(frame, rhs)?;
                let ord = match ty {
                    ElementaryType::Real => as_real(&l)?.partial_cmp(&as_real(&r)?),
                    ElementaryType::Int | ElementaryType::Dint => Some(as_int(&l)?.cmp(&as_int(&r)?)),
                    _ => match (&l, &r) {
                        (Value::Bool(a), Value::Bool(b)) => Some(a.cmp(b)),
                        (Value::Time(a), Value::Time(b)) => Some(a.cmp(b)),
                        (Value::String(a), Value::String(b)) => Some(a.cmp(b)),
                        _ => return Err(Fault::type_fault("comparison operands")),
                    },
                };
                let Some(ord) = ord else {
                    return Err(Fault::trap(TrapKind::NotFinite, "comparison with NaN".into()));
                };
                use std::cmp::Ordering::*;
                Ok(Value::Bool(match op {
                    BinaryOp::Eq => ord == Equal,
                    BinaryOp::Ne => ord != Equal,
                    BinaryOp::Lt => ord == Less,
                    BinaryOp::Le => ord != Greater,
                    BinaryOp::Gt => ord == Greater,
                    _ => ord != Less,
                }))
            }
            IKind::Arith { op, ty, lhs, rhs } => {
                let l = self.eval(frame, lhs)?;
                let r = self.eval(frame, rhs)?;
                arith(*op, *ty, &l, &r)
            }
            IKind::Call { func, ty, args } => {
                let vals = args.iter().map(|a| self.eval(frame, a)).collect::<EResult<Vec<_>>>()?;
                call(*func, *ty, vals)
            }
        }
    }
}

fn load(frame: &Frame, slot: usize) -> EResult<Value> {
    match &frame.slots[slot] {
        Slot::Val(v) => Ok(v.clone()),
        _ => Err(Fault::type_fault("scalar expected")),
    }
}

fn arith(op: BinaryOp, ty: ElementaryType, l: &Value, r: &Value) -> EResult<Value> {
    let div0 = || Fault::trap(TrapKind::DivisionByZero, "division by zero".into());
    if ty == ElementaryType::Real {
        let (a, b) = (as_real(l)?, as_real(r)?);
        return real_result(match op {
            BinaryOp::Add => a + b,
            BinaryOp::Sub => a - b,
            BinaryOp::Mul => a * b,
            BinaryOp::Div if b == 0.0 => return Err(div0()),
            BinaryOp::Div => a / b,
            _ => return Err(Fault::type_fault("REAL operator")),
        });
    }
    let (a, b) = (as_int(&coerce(l.clone(), ty)?)?, as_int(&coerce(r.clone(), ty)?)?);
    let v = match op {
        BinaryOp::Add => a.checked_add(b),
        BinaryOp::Sub => a.checked_sub(b),
        BinaryOp::Mul => a.checked_mul(b),
        BinaryOp::Div if b == 0 => return Err(div0()),
        BinaryOp::Div => a.checked_div(b),
        BinaryOp::Mod if b == 0 => return Err(div0()),
        BinaryOp::Mod => a.checked_rem(b),
        _ => return Err(Fault::type_fault("integer operator")),
    };
    int_result(ty, v)
}

fn call(func: Builtin, ty: ElementaryType, vals: Vec<Value>) -> EResult<Value> {
    match func {
        Builtin::Convert(from, to) => {
            let v = vals.into_iter().next().ok_or_else(|| Fault::type_fault("arity"))?;
            convert(v, from, to)
        }
        Builtin::Sqrt => {
            let x = as_real(&vals[0])?;
            if x < 0.0 {
                return Err(Fault::trap(TrapKind::InvalidArgument, "SQRT of a negative number".into()));
            }
            real_result(x.sqrt())
        }
        Builtin::Abs => match ty {
            ElementaryType::Real => real_result(as_real(&vals[0])?.abs()),
            _ => int_result(ty, as_int(&vals[0])?.checked_abs()),
        },
        Builtin::Min | Builtin::Max | Builtin::Limit => {
            let vals = vals.into_iter().map(|v| coerce(v, ty)).collect::<EResult<Vec<_>>>()?;
            let pick = |a: Value, b: Value, max: bool| -> EResult<Value> {
                let greater = match ty {
                    ElementaryType::Real => as_real(&b)? > as_real(&a)?,
                    _ => as_int(&b)? > as_int(&a)?,
                };
                Ok(if greater == max { b } else { a })
            };
            match func {
                Builtin::Limit => {
                    let mut it = vals.into_iter();
                    let (mn, x, mx) = (it.next().unwrap(), it.next().unwrap(), it.next().unwrap());
                    let lower = pick(x, mn, true)?;
                    pick(lower, mx, false)
                }
                _ => {
                    let max = func == Builtin::Max;
                    let mut it = vals.into_iter();
                    let mut acc = it.next().ok_or_else(|| Fault::type_fault("arity"))?;
                    for v in it {
                        acc = pick(acc, v, max)?;
                    }
                    Ok(acc)
                }
            }
        }
    }
}

/// Values produced by one scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub scan: u64,
    pub time_ms: i64,
    /// Output variables after the scan, in declaration order.
    pub outputs: Vec<(String, Value)>,
    /// Outputs whose value differs from before the scan.
    pub changed: Vec<String>,
}

impl ScanResult {
    pub fn get(&self, name: &str) -> Option<&Value> {
        self.outputs
            .iter()
            .find(|(n, _)| n.eq_ignore_ascii_case(name))
            .map(|(_, v)| v)
    }
}

/// A program or function block instance under the cyclic scan model.
#[derive(Debug, Clone)]
pub struct Runtime {
    codes: Vec<Code>,
    entry: usize,
    frame: Frame,
    scan: u64,
    cycle_ms: i64,
    frozen: Option<Trap>,
}

impl Runtime {
    /// Instantiate `entry` from a unit that passes the checker without
    /// errors. Variables start at their initializers or type defaults.
    pub fn instantiate(unit: &SourceUnit, entry: &str, cycle_ms: i64) -> Result<Runtime, InstantiateError> {
        let Some(entry_idx) = unit.pous.iter().position(|p| p.name.name.eq_ignore_ascii_case(entry)) else {
            return Err(InstantiateError::UnknownPou(entry.to_string()));
        };
        let (_, diags) = check_unit(unit);
        let errors = diag::error_count(&diags);
        if errors > 0 {
            return Err(InstantiateError::UnitHasErrors(errors));
        }
        if cycle_ms <= 0 {
            return Err(InstantiateError::BadCycle(cycle_ms));
        }
        let codes = lower_unit(unit).codes;
        let frame = new_frame(&codes, entry_idx)?;
        Ok(Runtime {
            codes,
            entry: entry_idx,
            frame,
            scan: 0,
            cycle_ms,
            frozen: None,
        })
    }

    pub fn entry_name(&self) -> &str {
        &self.codes[self.entry].name
    }

    pub fn entry_kind(&self) -> PouKind {
        self.codes[self.entry].kind
    }

    /// Number of completed scans.
    pub fn scan_count(&self) -> u64 {
        self.scan
    }

    pub fn cycle_ms(&self) -> i64 {
        self.cycle_ms
    }

    /// Time seen by the next scan.
    pub fn now_ms(&self) -> i64 {
        self.scan as i64 * self.cycle_ms
    }

    pub fn trap(&self) -> Option<&Trap> {
        self.frozen.as_ref()
    }

    /// Scalar variables of the entry POU: (name, type, section).
    pub fn variables(&self) -> Vec<(String, ElementaryType, VarKind)> {
        self.codes[self.entry]
            .vars
            .iter()
            .filter_map(|v| match v.ty {
                SlotTy::Elem(t) => Some((v.name.clone(), t, v.section)),
                _ => None,
            })
            .collect()
    }

    /// Names reported in each [`ScanResult`]: the VAR_OUTPUT variables, or
    /// every non-input scalar when the entry declares no outputs.
    pub fn output_names(&self) -> Vec<String> {
        let vars = self.variables();
        let outs: Vec<String> = vars
            .iter()
            .filter(|(_, _, s)| *s == VarKind::Output)
            .map(|(n, _, _)| n.clone())
            .collect();
        if !outs.is_empty() {
            return outs;
        }
        vars.into_iter()
            .filter(|(_, _, s)| *s != VarKind::Input)
            .map(|(n, _, _)| n)
            .collect()
    }

    /// Read a variable by name; dotted paths reach into instances
    /// (`Timer.ET`, `Loop.Inner.OUT`).
    pub fn get(&self, path: &str) -> Option<Value> {
        let mut code = &self.codes[self.entry];
        let mut frame = &self.frame;
        let mut parts = path.split('.').peekable();
        while let Some(part) = parts.next() {
            let slot = code.slot(part)?;
            match &frame.slots[slot] {
                Slot::Val(v) => return parts.peek().is_none().then(|| v.clone()),
                Slot::Std(inst) => {
                    let member = parts.next()?;
                    if parts.peek().is_some() {
                        return None;
                    }
                    let fb = inst.fb;
                    if let Some(i) = fb.outputs().iter().position(|(n, _)| n.eq_ignore_ascii_case(member)) {
                        return Some(inst.outputs[i].clone());
                    }
                    let i = fb.inputs().iter().position(|(n, _)| n.eq_ignore_ascii_case(member))?;
                    return Some(inst.inputs[i].clone());
                }
                Slot::User(f) => {
                    let SlotTy::User(ci) = code.vars[slot].ty else {
                        return None;
                    };
                    code = &self.codes[ci];
                    frame = f;
                    parts.peek()?;
                }
            }
        }
        None
    }

    /// Set a top-level scalar before the next scan. Integer values widen to
    /// wider numeric types; anything else must match exactly.
    pub fn set(&mut self, name: &str, value: Value) -> Result<(), ExecError> {
        let err = |reason: String| ExecError::Override {
            name: name.to_string(),
            reason,
        };
        let code = &self.codes[self.entry];
        let slot = code.slot(name).ok_or_else(|| err("no such variable".into()))?;
        let var = &code.vars[slot];
        let SlotTy::Elem(ty) = var.ty else {
            return Err(err("not a scalar variable".into()));
        };
        if var.constant {
            return Err(err("variable is CONSTANT".into()));
        }
        let widening = matches!(
            (value.ty(), ty),
            (ElementaryType::Int, ElementaryType::Dint | ElementaryType::Real)
                | (ElementaryType::Dint, ElementaryType::Real)
        );
        if value.ty() != ty && !widening {
            return Err(err(format!("type mismatch: expected {ty}, found {}", value.ty())));
        }
        let v = coerce(value, ty).map_err(|_| err(format!("value out of range for {ty}")))?;
        self.frame.slots[slot] = Slot::Val(v);
        Ok(())
    }

    /// Apply `overrides`, execute the body once and advance the scan counter.
    ///
    /// A trap freezes the runtime: the counter stays put and later scans fail
    /// with [`ExecError::Frozen`]; the state left by the trapped scan remains
    /// readable through [`Runtime::get`].
    pub fn scan(&mut self, overrides: &[(String, Value)]) -> Result<ScanResult, ExecError> {
        if let Some(t) = &self.frozen {
            return Err(ExecError::Frozen(t.clone()));
        }
        for (name, v) in overrides {
            self.set(name, v.clone())?;
        }
        let names = self.output_names();
        let before: Vec<Option<Value>> = names.iter().map(|n| self.get(n)).collect();
        let now = self.now_ms();
        let mut m = Machine {
            codes: &self.codes,
            now,
            cycle_ms: self.cycle_ms,
            iterations: 0,
        };
        if let Err(mut trap) = m.block(&mut self.frame, &self.codes[self.entry].body) {
            trap.scan = self.scan;
            self.frozen = Some(trap.clone());
            return Err(ExecError::Trap(trap));
        }
        let scan = self.scan;
        self.scan += 1;
        let mut outputs = Vec::new();
        let mut changed = Vec::new();
        for (name, old) in names.into_iter().zip(before) {
            let v = self.get(&name).expect("output exists");
            if old.as_ref() != Some(&v) {
                changed.push(name.clone());
            }
            outputs.push((name, v));
        }
        Ok(ScanResult {
            scan,
            time_ms: now,
            outputs,
            changed,
        })
    }
}

fn new_frame(codes: &[Code], idx: usize) -> Result<Frame, InstantiateError> {
    let code = &codes[idx];
    let mut slots = Vec::with_capacity(code.vars.len());
    for v in &code.vars {
        slots.push(match &v.ty {
            SlotTy::Elem(ty) => Slot::Val(match &v.init {
                Some(e) => eval_constant(e, *ty).map_err(|f| InstantiateError::Initializer {
                    name: v.name.clone(),
                    message: match f {
                        Fault::Raw(_, m) => m,
                        Fault::Located(t) => t.message,
                    },
                })?,
                None => Value::default_for(*ty),
            }),
            SlotTy::Std(fb) => Slot::Std(Box::new(StdInstance::new(*fb))),
            SlotTy::User(ci) => {
                let mut f = new_frame(codes, *ci)?;
                f.code = Some(*ci);
                Slot::User(Box::new(f))
            }
        });
    }
    Ok(Frame { slots, code: None })
}
