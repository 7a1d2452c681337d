//! Lowering of checked POUs to a slot-addressed form.

use std::collections::BTreeMap;

use super::value::Value;
use crate::sema::{signatures, Builtin, ParamRole, Signature, StdFb, Ty};
use crate::syntax::ast::*;
use crate::syntax::span::SourceSpan;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum SlotTy {
    Elem(ElementaryType),
    Std(StdFb),
    /// Index into the lowered code table.
    User(usize),
}

#[derive(Debug, Clone)]
pub(crate) struct VarInfo {
    pub name: String,
    pub section: VarKind,
    pub constant: bool,
    pub ty: SlotTy,
    /// Constant initializer for scalars.
    pub init: Option<IExpr>,
}

#[derive(Debug, Clone)]
pub(crate) struct Code {
    pub name: String,
    pub kind: PouKind,
    pub vars: Vec<VarInfo>,
    pub index: BTreeMap<String, usize>,
    pub body: Vec<IStmt>,
}

impl Code {
    pub fn slot(&self, name: &str) -> Option<usize> {
        self.index.get(&name.to_ascii_uppercase()).copied()
    }
}

#[derive(Debug, Clone)]
pub(crate) enum MemberRef {
    /// Index into the standard block's outputs.
    Std(usize),
    /// Slot in the callee frame.
    User(usize),
}

#[derive(Debug, Clone)]
pub(crate) struct IExpr {
    pub kind: IKind,
}

#[derive(Debug, Clone)]
pub(crate) enum IKind {
    Const(Value),
    Load(usize),
    Member { inst: usize, member: MemberRef },
    Neg(Box<IExpr>, ElementaryType),
    Not(Box<IExpr>),
    Arith { op: BinaryOp, ty: ElementaryType, lhs: Box<IExpr>, rhs: Box<IExpr> },
    Compare { op: BinaryOp, ty: ElementaryType, lhs: Box<IExpr>, rhs: Box<IExpr> },
    Logic { op: BinaryOp, lhs: Box<IExpr>, rhs: Box<IExpr> },
    Call { func: Builtin, ty: ElementaryType, args: Vec<IExpr> },
}

#[derive(Debug, Clone)]
pub(crate) struct IStmt {
    pub kind: SKind,
    pub span: SourceSpan,
}

#[derive(Debug, Clone)]
pub(crate) enum SKind {
    Assign { slot: usize, ty: ElementaryType, value: IExpr },
    If { branches: Vec<(IExpr, Vec<IStmt>)>, else_body: Vec<IStmt> },
    Case { selector: IExpr, arms: Vec<(Vec<CaseLabel>, Vec<IStmt>)>, else_body: Vec<IStmt> },
    For { slot: usize, ty: ElementaryType, from: IExpr, to: IExpr, by: Option<IExpr>, body: Vec<IStmt> },
    While { cond: IExpr, body: Vec<IStmt> },
    Repeat { body: Vec<IStmt>, until: IExpr },
    InvokeStd {
        slot: usize,
        /// (input index, value)
        inputs: Vec<(usize, IExpr)>,
        /// (output index, destination slot, destination type)
        outputs: Vec<(usize, usize, ElementaryType)>,
    },
    InvokeUser {
        slot: usize,
        /// (callee slot, callee type, value)
        inputs: Vec<(usize, ElementaryType, IExpr)>,
        /// (callee slot, caller slot)
        in_outs: Vec<(usize, usize)>,
        /// (callee slot, caller slot, caller type)
        outputs: Vec<(usize, usize, ElementaryType)>,
    },
    Exit,
    Return,
}

/// Static result type; integer literals default to DINT.
fn concrete(ty: &Ty) -> ElementaryType {
    match ty {
        Ty::Elem(e) => *e,
        _ => ElementaryType::Dint,
    }
}

pub(crate) struct Lowered {
    pub codes: Vec<Code>,
}

/// Lower every POU of a unit that passed the checker with no errors.
pub(crate) fn lower_unit(unit: &SourceUnit) -> Lowered {
    let sigs = signatures(unit);
    let mut code_index = BTreeMap::new();
    for (i, pou) in unit.pous.iter().enumerate() {
        code_index.entry(pou.name.key()).or_insert(i);
    }
    let mut codes = Vec::new();
    for pou in &unit.pous {
        let mut vars = Vec::new();
        let mut index = BTreeMap::new();
        for (sec, d) in pou.vars() {
            let ty = match &d.ty.kind {
                TypeKind::Elementary(e) => SlotTy::Elem(*e),
                TypeKind::Named(n) => match StdFb::lookup(n) {
                    Some(fb) => SlotTy::Std(fb),
                    None => SlotTy::User(code_index[&n.to_ascii_uppercase()]),
                },
            };
            index.insert(d.name.key(), vars.len());
            vars.push(VarInfo {
                name: d.name.name.clone(),
                section: sec.kind,
                constant: sec.constant,
                ty,
                init: None,
            });
        }
        codes.push(Code {
            name: pou.name.name.clone(),
            kind: pou.kind,
            vars,
            index,
            body: Vec::new(),
        });
    }
    for (i, pou) in unit.pous.iter().enumerate() {
        let cx = Cx {
            codes: &codes,
            code: &codes[i],
            sigs: &sigs,
        };
        let body = cx.block(&pou.body);
        let inits: Vec<Option<IExpr>> = pou
            .vars()
            .map(|(_, d)| d.init.as_ref().map(|e| cx.expr(e)))
            .collect();
        codes[i].body = body;
        for (var, init) in codes[i].vars.iter_mut().zip(inits) {
            var.init = init;
        }
    }
    Lowered { codes }
}

struct Cx<'a> {
    codes: &'a [Code],
    code: &'a Code,
    sigs: &'a BTreeMap<String, Signature>,
}

impl Cx<'_> {
    fn slot(&self, id: &Ident) -> usize {
        self.code.slot(&id.name).expect("checked identifier")
    }

    fn slot_elem(&self, slot: usize) -> ElementaryType {
        match self.code.vars[slot].ty {
            SlotTy::Elem(e) => e,
            _ => panic!("scalar slot expected"),
        }
    }

    fn block(&self, block: &Block) -> Vec<IStmt> {
        block.stmts.iter().map(|s| self.stmt(s)).collect()
    }

    fn stmt(&self, stmt: &Stmt) -> IStmt {
        let kind = match &stmt.kind {
            StmtKind::Assign { target, value } => {
                let ExprKind::Var(id) = &target.kind else {
                    panic!("checked assignment target")
                };
                let slot = self.slot(id);
                SKind::Assign {
                    slot,
                    ty: self.slot_elem(slot),
                    value: self.expr(value),
                }
            }
            StmtKind::If {
                branches,
                else_body,
            } => SKind::If {
                branches: branches
                    .iter()
                    .map(|(c, b)| (self.expr(c), self.block(b)))
                    .collect(),
                else_body: else_body.as_ref().map(|b| self.block(b)).unwrap_or_default(),
            },
            StmtKind::Case {
                selector,
                arms,
                else_body,
            } => SKind::Case {
                selector: self.expr(selector),
                arms: arms
                    .iter()
                    .map(|a| (a.labels.clone(), self.block(&a.body)))
                    .collect(),
                else_body: else_body.as_ref().map(|b| self.block(b)).unwrap_or_default(),
            },
            StmtKind::For {
                var,
                from,
                to,
                by,
                body,
            } => {
                let slot = self.slot(var);
                SKind::For {
                    slot,
                    ty: self.slot_elem(slot),
                    from: self.expr(from),
                    to: self.expr(to),
                    by: by.as_ref().map(|e| self.expr(e)),
                    body: self.block(body),
                }
            }
            StmtKind::While { cond, body } => SKind::While {
                cond: self.expr(cond),
                body: self.block(body),
            },
            StmtKind::Repeat { body, until } => SKind::Repeat {
                body: self.block(body),
                until: self.expr(until),
            },
            StmtKind::Invoke { instance, args } => self.invoke(instance, args),
            StmtKind::Exit => SKind::Exit,
            StmtKind::Return => SKind::Return,
        };
        IStmt {
            kind,
            span: stmt.span,
        }
    }

    fn invoke(&self, instance: &Ident, args: &[Arg]) -> SKind {
        let slot = self.slot(instance);
        let var_slot = |e: &Expr| match &e.kind {
            ExprKind::Var(id) => self.slot(id),
            _ => panic!("checked binding"),
        };
        match &self.code.vars[slot].ty {
            SlotTy::Std(fb) => {
                let find = |list: &[(&str, ElementaryType)], name: &Ident| {
                    list.iter()
                        .position(|(n, _)| n.eq_ignore_ascii_case(&name.name))
                        .expect("checked parameter")
                };
                let mut inputs = Vec::new();
                let mut outputs = Vec::new();
                for a in args {
                    match a.direction {
                        ArgDirection::Input => {
                            inputs.push((find(fb.inputs(), &a.name), self.expr(&a.value)))
                        }
                        ArgDirection::Output => {
                            let dst = var_slot(&a.value);
                            outputs.push((find(fb.outputs(), &a.name), dst, self.slot_elem(dst)));
                        }
                    }
                }
                SKind::InvokeStd {
                    slot,
                    inputs,
                    outputs,
                }
            }
            SlotTy::User(ci) => {
                let callee = &self.codes[*ci];
                let sig = &self.sigs[&callee.name.to_ascii_uppercase()];
                let mut inputs = Vec::new();
                let mut in_outs = Vec::new();
                let mut outputs = Vec::new();
                for a in args {
                    let param = sig.param(&a.name.name).expect("checked parameter");
                    let cslot = callee.slot(&param.name).expect("parameter slot");
                    match param.role {
                        ParamRole::Input => inputs.push((cslot, param.ty, self.expr(&a.value))),
                        ParamRole::InOut => in_outs.push((cslot, var_slot(&a.value))),
                        ParamRole::Output => {
                            let dst = var_slot(&a.value);
                            outputs.push((cslot, dst, self.slot_elem(dst)));
                        }
                    }
                }
                SKind::InvokeUser {
                    slot,
                    inputs,
                    in_outs,
                    outputs,
                }
            }
            SlotTy::Elem(_) => panic!("checked instance"),
        }
    }

    fn ty(&self, e: &Expr) -> Ty {
        match &e.kind {
            ExprKind::Literal(l) => match l {
                Literal::Bool(_) => Ty::BOOL,
                Literal::Int(_) => Ty::AnyInt,
                Literal::Real(_) => Ty::REAL,
                Literal::Time(_) => Ty::TIME,
                Literal::String(_) => Ty::Elem(ElementaryType::String),
            },
            ExprKind::Var(id) => Ty::Elem(self.slot_elem(self.slot(id))),
            ExprKind::Member { base, member } => {
                let (ty, _) = self.member(base, member);
                Ty::Elem(ty)
            }
            ExprKind::Unary { op: UnaryOp::Not, .. } => Ty::BOOL,
            ExprKind::Unary { operand, .. } => self.ty(operand),
            ExprKind::Binary { op, lhs, rhs } => {
                if op.is_logical() || op.is_comparison() {
                    Ty::BOOL
                } else {
                    self.ty(lhs).join(&self.ty(rhs))
                }
            }
            ExprKind::Call { func, args } => match Builtin::lookup(&func.name) {
                Some(Builtin::Convert(_, to)) => Ty::Elem(to),
                Some(Builtin::Sqrt) => Ty::REAL,
                _ => args
                    .iter()
                    .fold(Ty::AnyInt, |acc, a| acc.join(&self.ty(a))),
            },
        }
    }

    fn member(&self, base: &Ident, member: &Ident) -> (ElementaryType, (usize, MemberRef)) {
        let inst = self.slot(base);
        match &self.code.vars[inst].ty {
            SlotTy::Std(fb) => {
                let (i, (_, ty)) = fb
                    .outputs()
                    .iter()
                    .enumerate()
                    .find(|(_, (n, _))| n.eq_ignore_ascii_case(&member.name))
                    .expect("checked member");
                (*ty, (inst, MemberRef::Std(i)))
            }
            SlotTy::User(ci) => {
                let callee = &self.codes[*ci];
                let slot = callee.slot(&member.name).expect("checked member");
                let SlotTy::Elem(ty) = callee.vars[slot].ty else {
                    panic!("scalar output expected")
                };
                (ty, (inst, MemberRef::User(slot)))
            }
            SlotTy::Elem(_) => panic!("checked instance"),
        }
    }

    fn expr(&self, e: &Expr) -> IExpr {
        let kind = match &e.kind {
            ExprKind::Literal(l) => IKind::Const(match l {
                Literal::Bool(b) => Value::Bool(*b),
                Literal::Int(v) => Value::Dint(*v),
                Literal::Real(v) => Value::Real(*v),
                Literal::Time(v) => Value::Time(*v),
                Literal::String(s) => Value::String(s.clone()),
            }),
            ExprKind::Var(id) => IKind::Load(self.slot(id)),
            ExprKind::Member { base, member } => {
                let (_, (inst, member)) = self.member(base, member);
                IKind::Member { inst, member }
            }
            ExprKind::Unary { op, operand } => {
                let inner = Box::new(self.expr(operand));
                match op {
                    UnaryOp::Not => IKind::Not(inner),
                    UnaryOp::Neg => IKind::Neg(inner, concrete(&self.ty(operand))),
                }
            }
            ExprKind::Binary { op, lhs, rhs } => {
                let (lt, rt) = (self.ty(lhs), self.ty(rhs));
                let (l, r) = (Box::new(self.expr(lhs)), Box::new(self.expr(rhs)));
                if op.is_logical() {
                    IKind::Logic { op: *op, lhs: l, rhs: r }
                } else if op.is_comparison() {
                    let ty = if lt.is_numeric() { concrete(&lt.join(&rt)) } else { concrete(&lt) };
                    IKind::Compare { op: *op, ty, lhs: l, rhs: r }
                } else {
                    IKind::Arith {
                        op: *op,
                        ty: concrete(&lt.join(&rt)),
                        lhs: l,
                        rhs: r,
                    }
                }
            }
            ExprKind::Call { func, args } => IKind::Call {
                func: Builtin::lookup(&func.name).expect("checked function"),
                ty: concrete(&self.ty(e)),
                args: args.iter().map(|a| self.expr(a)).collect(),
            },
        };
        IExpr { kind }
    }
}
