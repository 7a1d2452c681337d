use std::collections::{BTreeMap, BTreeSet};

use super::stdlib::{Builtin, StdFb};
use super::types::{assignable, Ty};
use super::{ParamRole, Scope, Signature, Symbol, SymbolKind, SymbolTable};
use crate::diag::{self, codes, Diagnostic};
use crate::syntax::ast::*;
use crate::syntax::span::SourceSpan;

/// Resolve names and enforce the type rules over a parsed unit.
///
/// Diagnostics are ordered by span. The returned table holds one scope per
/// POU plus the globally visible FB types and functions.
pub fn check_unit(unit: &SourceUnit) -> (SymbolTable, Vec<Diagnostic>) {
    let mut ck = Checker {
        sigs: super::signatures(unit),
        program_names: unit
            .pous
            .iter()
            .filter(|p| p.kind == PouKind::Program)
            .map(|p| p.name.key())
            .collect(),
        diags: Vec::new(),
    };
    let mut table = SymbolTable {
        globals: globals(unit),
        scopes: BTreeMap::new(),
    };

    let mut seen: BTreeMap<String, SourceSpan> = BTreeMap::new();
    for pou in &unit.pous {
        let key = pou.name.key();
        if StdFb::lookup(&key).is_some() {
            ck.error(
                codes::DUPLICATE_POU,
                format!("'{}' conflicts with a standard function block", pou.name),
                pou.name.span,
            );
        } else if seen.contains_key(&key) {
            ck.error(
                codes::DUPLICATE_POU,
                format!("duplicate POU '{}'", pou.name),
                pou.name.span,
            );
        }
        seen.entry(key.clone()).or_insert(pou.name.span);

        let scope = ck.declare(pou);
        ck.check_body(pou, &scope);
        table.scopes.entry(key).or_insert(scope);
    }
    ck.check_recursion(unit);
    diag::sort(&mut ck.diags);
    ck.diags.dedup();
    (table, ck.diags)
}

fn globals(unit: &SourceUnit) -> BTreeMap<String, Symbol> {
    let mut g = BTreeMap::new();
    for fb in StdFb::ALL {
        g.insert(
            fb.name().to_string(),
            Symbol {
                name: fb.name().to_string(),
                kind: SymbolKind::StdlibFb,
                ty: fb.name().to_string(),
                section: None,
                constant: false,
                span: SourceSpan::synthetic(),
            },
        );
    }
    for name in ["MIN", "MAX", "LIMIT", "ABS", "SQRT"] {
        g.insert(
            name.to_string(),
            Symbol {
                name: name.to_string(),
                kind: SymbolKind::Function,
                ty: String::new(),
                section: None,
                constant: false,
                span: SourceSpan::synthetic(),
            },
        );
    }
    for pou in unit.pous.iter().filter(|p| p.kind == PouKind::FunctionBlock) {
        g.entry(pou.name.key()).or_insert_with(|| Symbol {
            name: pou.name.name.clone(),
            kind: SymbolKind::FbType,
            ty: pou.name.name.clone(),
            section: None,
            constant: false,
            span: pou.name.span,
        });
    }
    g
}

struct Checker {
    sigs: BTreeMap<String, Signature>,
    program_names: BTreeSet<String>,
    diags: Vec<Diagnostic>,
}

/// Loop nesting while walking statements.
#[derive(Clone, Copy)]
struct Ctx {
    in_loop: bool,
}

impl Checker {
    fn error(&mut self, code: &str, message: String, span: SourceSpan) {
        self.diags.push(Diagnostic::error(code, message, span));
    }

    fn mismatch(&mut self, expected: &Ty, found: &Ty, span: SourceSpan) {
        self.error(
            codes::TYPE_MISMATCH,
            format!("type mismatch: expected {expected}, found {found}"),
            span,
        );
    }

    // ---- declarations ---------------------------------------------------

    fn declare(&mut self, pou: &Pou) -> Scope {
        let mut symbols: BTreeMap<String, Symbol> = BTreeMap::new();
        for (sec, d) in pou.vars() {
            let key = d.name.key();
            if symbols.contains_key(&key) {
                self.error(
                    codes::DUPLICATE_DECL,
                    format!("duplicate declaration of '{}'", d.name),
                    d.name.span,
                );
                continue;
            }
            let kind = match &d.ty.kind {
                TypeKind::Elementary(_) => SymbolKind::Variable,
                TypeKind::Named(name) => {
                    self.check_instance_decl(sec, d, name);
                    SymbolKind::FbInstance
                }
            };
            if let Some(init) = &d.init {
                self.check_initializer(d, init, kind);
            }
            symbols.insert(
                key,
                Symbol {
                    name: d.name.name.clone(),
                    kind,
                    ty: d.ty.display_name(),
                    section: Some(sec.kind),
                    constant: sec.constant,
                    span: d.name.span,
                },
            );
        }
        Scope {
            pou: pou.name.name.clone(),
            kind: pou.kind,
            symbols,
        }
    }

    fn check_instance_decl(&mut self, sec: &VarSection, d: &VarDecl, name: &str) {
        let key = name.to_ascii_uppercase();
        if self.program_names.contains(&key) && !self.sigs.contains_key(&key) {
            self.error(
                codes::UNKNOWN_FB_TYPE,
                format!("'{name}' is a PROGRAM, not a function block type"),
                d.ty.span,
            );
        } else if !self.sigs.contains_key(&key) {
            self.error(
                codes::UNKNOWN_FB_TYPE,
                format!("unknown function block type '{name}'"),
                d.ty.span,
            );
        }
        if sec.kind != VarKind::Local {
            self.error(
                codes::INSTANCE_SECTION,
                format!(
                    "function block instance '{}' must be declared in VAR, not {}",
                    d.name,
                    sec.kind.keyword()
                ),
                d.name.span,
            );
        }
        if sec.constant {
            self.error(
                codes::INSTANCE_SECTION,
                format!("function block instance '{}' cannot be CONSTANT", d.name),
                d.name.span,
            );
        }
    }

    fn check_initializer(&mut self, d: &VarDecl, init: &Expr, kind: SymbolKind) {
        if kind == SymbolKind::FbInstance {
            self.error(
                codes::TYPE_MISMATCH,
                format!("function block instance '{}' cannot have an initializer", d.name),
                init.span,
            );
            return;
        }
        if !is_constant(init) {
            self.error(
                codes::NOT_CONSTANT,
                format!("initializer of '{}' must be a constant expression", d.name),
                init.span,
            );
            return;
        }
        let empty = Scope {
            pou: String::new(),
            kind: PouKind::Program,
            symbols: BTreeMap::new(),
        };
        let found = self.expr(&empty, init);
        let expected = Ty::of(&d.ty);
        if !assignable(&expected, &found) {
            self.mismatch(&expected, &found, init.span);
        }
    }

    fn check_recursion(&mut self, unit: &SourceUnit) {
        let mut edges: BTreeMap<String, Vec<(String, &VarDecl)>> = BTreeMap::new();
        for pou in unit.pous.iter().filter(|p| p.kind == PouKind::FunctionBlock) {
            let list = edges.entry(pou.name.key()).or_default();
            for (_, d) in pou.vars() {
                if let TypeKind::Named(n) = &d.ty.kind {
                    list.push((n.to_ascii_uppercase(), d));
                }
            }
        }
        for (owner, list) in &edges {
            for (target, decl) in list {
                if reaches(&edges, target, owner) {
                    self.error(
                        codes::RECURSIVE_INSTANCE,
                        format!(
                            "recursive instantiation: '{}' of type {} contains {}",
                            decl.name,
                            decl.ty.display_name(),
                            owner
                        ),
                        decl.ty.span,
                    );
                }
            }
        }
    }

    // ---- statements -----------------------------------------------------

    fn check_body(&mut self, pou: &Pou, scope: &Scope) {
        self.block(scope, &pou.body, Ctx { in_loop: false });
    }

    fn block(&mut self, scope: &Scope, block: &Block, ctx: Ctx) {
        for stmt in &block.stmts {
            self.stmt(scope, stmt, ctx);
        }
    }

    fn condition(&mut self, scope: &Scope, cond: &Expr) {
        let ty = self.expr(scope, cond);
        if !ty.is_error() && ty != Ty::BOOL {
            self.error(
                codes::CONDITION_NOT_BOOL,
                format!("condition must be BOOL, found {ty}"),
                cond.span,
            );
        }
    }

    fn stmt(&mut self, scope: &Scope, stmt: &Stmt, ctx: Ctx) {
        let looped = Ctx { in_loop: true };
        match &stmt.kind {
            StmtKind::Assign { target, value } => {
                let dst = self.target(scope, target);
                let src = self.expr(scope, value);
                if !assignable(&dst, &src) {
                    self.mismatch(&dst, &src, value.span);
                }
            }
            StmtKind::If {
                branches,
                else_body,
            } => {
                for (cond, body) in branches {
                    self.condition(scope, cond);
                    self.block(scope, body, ctx);
                }
                if let Some(body) = else_body {
                    self.block(scope, body, ctx);
                }
            }
            StmtKind::Case {
                selector,
                arms,
                else_body,
            } => {
                let ty = self.expr(scope, selector);
                if !ty.is_error() && !ty.is_integer() {
                    self.error(
                        codes::TYPE_MISMATCH,
                        format!("CASE selector must be an integer, found {ty}"),
                        selector.span,
                    );
                }
                for arm in arms {
                    self.block(scope, &arm.body, ctx);
                }
                if let Some(body) = else_body {
                    self.block(scope, body, ctx);
                }
            }
            StmtKind::For {
                var,
                from,
                to,
                by,
                body,
            } => {
                let var_expr = Expr {
                    kind: ExprKind::Var(var.clone()),
                    span: var.span,
                };
                let ty = self.target(scope, &var_expr);
                if !ty.is_error() && !ty.is_integer() {
                    self.error(
                        codes::TYPE_MISMATCH,
                        format!("FOR variable '{var}' must be an integer, found {ty}"),
                        var.span,
                    );
                }
                for e in std::iter::once(from).chain(std::iter::once(to)).chain(by.iter()) {
                    let found = self.expr(scope, e);
                    if ty.is_integer() && !assignable(&ty, &found) {
                        self.mismatch(&ty, &found, e.span);
                    }
                }
                self.block(scope, body, looped);
            }
            StmtKind::While { cond, body } => {
                self.condition(scope, cond);
                self.block(scope, body, looped);
            }
            StmtKind::Repeat { body, until } => {
                self.block(scope, body, looped);
                self.condition(scope, until);
            }
            StmtKind::Invoke { instance, args } => self.invoke(scope, instance, args),
            StmtKind::Exit => {
                if !ctx.in_loop {
                    self.error(
                        codes::EXIT_OUTSIDE_LOOP,
                        "EXIT outside of a loop".to_string(),
                        stmt.span,
                    );
                }
            }
            StmtKind::Return => {}
        }
    }

    fn invoke(&mut self, scope: &Scope, instance: &Ident, args: &[Arg]) {
        let Some(sym) = scope.get(&instance.name) else {
            self.error(
                codes::UNDECLARED,
                format!("undeclared identifier '{instance}'"),
                instance.span,
            );
            for a in args {
                self.expr(scope, &a.value);
            }
            return;
        };
        if sym.kind != SymbolKind::FbInstance {
            self.error(
                codes::NOT_AN_INSTANCE,
                format!("'{instance}' is not a function block instance"),
                instance.span,
            );
            return;
        }
        let Some(sig) = self.sigs.get(&sym.ty.to_ascii_uppercase()).cloned() else {
            // unknown type already reported at the declaration
            for a in args {
                self.expr(scope, &a.value);
            }
            return;
        };
        let mut bound = BTreeSet::new();
        for a in args {
            if !bound.insert(a.name.key()) {
                self.error(
                    codes::DUPLICATE_ARGUMENT,
                    format!("parameter '{}' bound more than once", a.name),
                    a.name.span,
                );
            }
            let param = sig.param(&a.name.name);
            match (a.direction, param.map(|p| p.role)) {
                (ArgDirection::Input, Some(ParamRole::Input)) => {
                    let p = param.unwrap();
                    let found = self.expr(scope, &a.value);
                    let expected = Ty::Elem(p.ty);
                    if !assignable(&expected, &found) {
                        self.mismatch(&expected, &found, a.value.span);
                    }
                }
                (ArgDirection::Input, Some(ParamRole::InOut)) => {
                    let p = param.unwrap();
                    if !matches!(a.value.kind, ExprKind::Var(_)) {
                        self.error(
                            codes::TYPE_MISMATCH,
                            format!("VAR_IN_OUT parameter '{}' needs a variable", a.name),
                            a.value.span,
                        );
                        self.expr(scope, &a.value);
                        continue;
                    }
                    let found = self.target(scope, &a.value);
                    let expected = Ty::Elem(p.ty);
                    if !found.is_error() && found != expected {
                        self.mismatch(&expected, &found, a.value.span);
                    }
                }
                (ArgDirection::Output, Some(ParamRole::Output)) => {
                    let p = param.unwrap();
                    if !matches!(a.value.kind, ExprKind::Var(_)) {
                        self.error(
                            codes::TYPE_MISMATCH,
                            format!("output '{}' must be bound to a variable", a.name),
                            a.value.span,
                        );
                        self.expr(scope, &a.value);
                        continue;
                    }
                    let dst = self.target(scope, &a.value);
                    let src = Ty::Elem(p.ty);
                    if !assignable(&dst, &src) {
                        self.mismatch(&dst, &src, a.value.span);
                    }
                }
                (dir, _) => {
                    let what = match dir {
                        ArgDirection::Input => "input",
                        ArgDirection::Output => "output",
                    };
                    self.error(
                        codes::UNKNOWN_PARAMETER,
                        format!("'{}' is not an {what} of {}", a.name, sig.name),
                        a.name.span,
                    );
                    self.expr(scope, &a.value);
                }
            }
        }
    }

    /// Type of an assignment target; reports targets that cannot be written.
    fn target(&mut self, scope: &Scope, target: &Expr) -> Ty {
        match &target.kind {
            ExprKind::Var(id) => match scope.get(&id.name) {
                None => {
                    self.error(
                        codes::UNDECLARED,
                        format!("undeclared identifier '{id}'"),
                        id.span,
                    );
                    Ty::Error
                }
                Some(sym) if sym.kind == SymbolKind::FbInstance => {
                    self.error(
                        codes::TYPE_MISMATCH,
                        format!("cannot assign to function block instance '{id}'"),
                        id.span,
                    );
                    Ty::Error
                }
                Some(sym) => {
                    if sym.constant {
                        self.error(
                            codes::CONSTANT_WRITE,
                            format!("cannot write to constant '{id}'"),
                            id.span,
                        );
                    }
                    Ty::Elem(ElementaryType::from_name(&sym.ty).expect("elementary"))
                }
            },
            ExprKind::Member { base, member } => {
                if scope.get(&base.name).is_none() {
                    self.error(
                        codes::UNDECLARED,
                        format!("undeclared identifier '{base}'"),
                        base.span,
                    );
                    return Ty::Error;
                }
                self.error(
                    codes::FOREIGN_WRITE,
                    format!(
                        "cannot write '{base}.{member}'; pass inputs as call parameters of '{base}'"
                    ),
                    target.span,
                );
                Ty::Error
            }
            _ => {
                self.expr(scope, target);
                self.error(
                    codes::TYPE_MISMATCH,
                    "assignment target must be a variable".to_string(),
                    target.span,
                );
                Ty::Error
            }
        }
    }

    // ---- expressions ----------------------------------------------------

    fn expr(&mut self, scope: &Scope, e: &Expr) -> Ty {
        match &e.kind {
            ExprKind::Literal(l) => match l {
                Literal::Bool(_) => Ty::BOOL,
                Literal::Int(_) => Ty::AnyInt,
                Literal::Real(_) => Ty::REAL,
                Literal::Time(_) => Ty::TIME,
                Literal::String(_) => Ty::Elem(ElementaryType::String),
            },
            ExprKind::Var(id) => match scope.get(&id.name) {
                None => {
                    self.error(
                        codes::UNDECLARED,
                        format!("undeclared identifier '{id}'"),
                        id.span,
                    );
                    Ty::Error
                }
                Some(sym) if sym.kind == SymbolKind::FbInstance => {
                    self.error(
                        codes::TYPE_MISMATCH,
                        format!("function block instance '{id}' used as a value"),
                        id.span,
                    );
                    Ty::Error
                }
                Some(sym) => Ty::Elem(ElementaryType::from_name(&sym.ty).expect("elementary")),
            },
            ExprKind::Member { base, member } => {
                let Some(sym) = scope.get(&base.name) else {
                    self.error(
                        codes::UNDECLARED,
                        format!("undeclared identifier '{base}'"),
                        base.span,
                    );
                    return Ty::Error;
                };
                if sym.kind != SymbolKind::FbInstance {
                    self.error(
                        codes::NOT_AN_INSTANCE,
                        format!("'{base}' is not a function block instance"),
                        base.span,
                    );
                    return Ty::Error;
                }
                let Some(sig) = self.sigs.get(&sym.ty.to_ascii_uppercase()) else {
                    return Ty::Error;
                };
                match sig.param(&member.name) {
                    Some(p) if p.role == ParamRole::Output => Ty::Elem(p.ty),
                    _ => {
                        let msg = format!("'{member}' is not an output of {}", sig.name);
                        self.error(codes::NOT_AN_OUTPUT, msg, member.span);
                        Ty::Error
                    }
                }
            }
            ExprKind::Unary { op, operand } => {
                let ty = self.expr(scope, operand);
                match op {
                    _ if ty.is_error() => Ty::Error,
                    UnaryOp::Not if ty == Ty::BOOL => Ty::BOOL,
                    UnaryOp::Neg if ty.is_numeric() => ty,
                    UnaryOp::Neg if ty.is_time() => {
                        self.time_misuse(e.span);
                        Ty::Error
                    }
                    UnaryOp::Not => {
                        self.mismatch(&Ty::BOOL, &ty, operand.span);
                        Ty::Error
                    }
                    UnaryOp::Neg => {
                        self.error(
                            codes::TYPE_MISMATCH,
                            format!("type mismatch: '-' expects a number, found {ty}"),
                            operand.span,
                        );
                        Ty::Error
                    }
                }
            }
            ExprKind::Binary { op, lhs, rhs } => {
                let l = self.expr(scope, lhs);
                let r = self.expr(scope, rhs);
                self.binary(*op, &l, &r, e.span)
            }
            ExprKind::Call { func, args } => self.call(scope, func, args, e.span),
        }
    }

    fn time_misuse(&mut self, span: SourceSpan) {
        self.error(
            codes::TIME_MISUSE,
            "TIME values may only be assigned, compared, converted or passed to timers"
                .to_string(),
            span,
        );
    }

    fn binary(&mut self, op: BinaryOp, l: &Ty, r: &Ty, span: SourceSpan) -> Ty {
        if op.is_logical() {
            if !l.is_error() && !r.is_error() && (*l != Ty::BOOL || *r != Ty::BOOL) {
                self.error(
                    codes::TYPE_MISMATCH,
                    format!("type mismatch: {} expects BOOL operands, found {l} and {r}", op.symbol()),
                    span,
                );
            }
            return Ty::BOOL;
        }
        if op.is_comparison() {
            if l.is_error() || r.is_error() {
                return Ty::BOOL;
            }
            let equality = matches!(op, BinaryOp::Eq | BinaryOp::Ne);
            let ok = (l.is_numeric() && r.is_numeric())
                || (l == r && (l.is_time() || (equality && matches!(l, Ty::Elem(_)))));
            if !ok {
                self.error(
                    codes::TYPE_MISMATCH,
                    format!("type mismatch: cannot compare {l} {} {r}", op.symbol()),
                    span,
                );
            }
            return Ty::BOOL;
        }
        // arithmetic
        if l.is_error() || r.is_error() {
            return Ty::Error;
        }
        if l.is_time() || r.is_time() {
            self.time_misuse(span);
            return Ty::Error;
        }
        if !l.is_numeric() || !r.is_numeric() {
            self.error(
                codes::TYPE_MISMATCH,
                format!("type mismatch: {} expects numbers, found {l} and {r}", op.symbol()),
                span,
            );
            return Ty::Error;
        }
        if op == BinaryOp::Mod && (!l.is_integer() || !r.is_integer()) {
            self.error(
                codes::TYPE_MISMATCH,
                format!("type mismatch: MOD expects integers, found {l} and {r}"),
                span,
            );
            return Ty::Error;
        }
        l.join(r)
    }

    fn call(&mut self, scope: &Scope, func: &Ident, args: &[Expr], span: SourceSpan) -> Ty {
        let tys: Vec<Ty> = args.iter().map(|a| self.expr(scope, a)).collect();
        let Some(builtin) = Builtin::lookup(&func.name) else {
            self.error(
                codes::UNKNOWN_FUNCTION,
                format!("unknown function '{func}'"),
                func.span,
            );
            return Ty::Error;
        };
        let arity_ok = match builtin {
            Builtin::Min | Builtin::Max => args.len() >= 2,
            Builtin::Limit => args.len() == 3,
            Builtin::Abs | Builtin::Sqrt | Builtin::Convert(..) => args.len() == 1,
        };
        if !arity_ok {
            self.error(
                codes::ARITY,
                format!("wrong number of arguments to {}: {}", func.name.to_ascii_uppercase(), args.len()),
                span,
            );
            return Ty::Error;
        }
        if tys.iter().any(Ty::is_error) {
            return match builtin {
                Builtin::Convert(_, to) => Ty::Elem(to),
                Builtin::Sqrt => Ty::REAL,
                _ => Ty::Error,
            };
        }
        match builtin {
            Builtin::Convert(from, to) => {
                let expected = Ty::Elem(from);
                if !assignable(&expected, &tys[0]) {
                    self.mismatch(&expected, &tys[0], args[0].span);
                }
                Ty::Elem(to)
            }
            _ => {
                for (t, a) in tys.iter().zip(args) {
                    if !t.is_numeric() {
                        if t.is_time() {
                            self.time_misuse(a.span);
                        } else {
                            self.error(
                                codes::TYPE_MISMATCH,
                                format!("type mismatch: expected a number, found {t}"),
                                a.span,
                            );
                        }
                        return Ty::Error;
                    }
                }
                if builtin == Builtin::Sqrt {
                    Ty::REAL
                } else {
                    tys.iter().fold(Ty::AnyInt, |acc, t| acc.join(t))
                }
            }
        }
    }
}

fn reaches(edges: &BTreeMap<String, Vec<(String, &VarDecl)>>, from: &str, goal: &str) -> bool {
    let mut stack = vec![from.to_string()];
    let mut seen = BTreeSet::new();
    while let Some(n) = stack.pop() {
        if n == goal {
            return true;
        }
        if !seen.insert(n.clone()) {
            continue;
        }
        if let Some(list) = edges.get(&n) {
            stack.extend(list.iter().map(|(t, _)| t.clone()));
        }
    }
    false
}

/// Literals combined with operators only.
pub(crate) fn is_constant(e: &Expr) -> bool {
    match &e.kind {
        ExprKind::Literal(_) => true,
        ExprKind::Unary { operand, .. } => is_constant(operand),
        ExprKind::Binary { lhs, rhs, .. } => is_constant(lhs) && is_constant(rhs),
        _ => false,
    }
}
