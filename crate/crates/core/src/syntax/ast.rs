//! Syntax tree for the supported Structured Text subset.
//!
//! Nodes carry spans and attached comments. Derived `PartialEq` compares
//! everything; use [`SourceUnit::structurally_eq`] to compare shape only.

use std::fmt;

use super::span::SourceSpan;
use super::token::CommentStyle;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SourceUnit {
    pub pous: Vec<Pou>,
    /// Comments after the last POU.
    pub trailing_comments: Vec<Comment>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comment {
    pub style: CommentStyle,
    /// Text between the delimiters, untrimmed.
    pub text: String,
    pub span: SourceSpan,
}

impl Comment {
    pub fn block(text: impl Into<String>) -> Self {
        Comment {
            style: CommentStyle::Block,
            text: text.into(),
            span: SourceSpan::synthetic(),
        }
    }
}

/// Identifier with its source spelling. Resolution is case-insensitive;
/// use [`Ident::key`] for lookups.
#[derive(Debug, Clone, PartialEq)]
pub struct Ident {
    pub name: String,
    pub span: SourceSpan,
}

impl Ident {
    pub fn new(name: impl Into<String>) -> Self {
        Ident {
            name: name.into(),
            span: SourceSpan::synthetic(),
        }
    }

    pub fn key(&self) -> String {
        self.name.to_ascii_uppercase()
    }
}

impl fmt::Display for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PouKind {
    Program,
    FunctionBlock,
}

impl PouKind {
    pub fn keyword(self) -> &'static str {
        match self {
            PouKind::Program => "PROGRAM",
            PouKind::FunctionBlock => "FUNCTION_BLOCK",
        }
    }

    pub fn end_keyword(self) -> &'static str {
        match self {
            PouKind::Program => "END_PROGRAM",
            PouKind::FunctionBlock => "END_FUNCTION_BLOCK",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pou {
    pub kind: PouKind,
    pub name: Ident,
    pub var_sections: Vec<VarSection>,
    pub body: Block,
    /// Comments before the POU header.
    pub comments: Vec<Comment>,
    pub span: SourceSpan,
}

impl Pou {
    pub fn vars(&self) -> impl Iterator<Item = (&VarSection, &VarDecl)> {
        self.var_sections
            .iter()
            .flat_map(|s| s.decls.iter().map(move |d| (s, d)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarKind {
    Input,
    Output,
    InOut,
    Local,
}

impl VarKind {
    pub fn keyword(self) -> &'static str {
        match self {
            VarKind::Input => "VAR_INPUT",
            VarKind::Output => "VAR_OUTPUT",
            VarKind::InOut => "VAR_IN_OUT",
            VarKind::Local => "VAR",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarSection {
    pub kind: VarKind,
    pub constant: bool,
    pub decls: Vec<VarDecl>,
    pub trailing_comments: Vec<Comment>,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarDecl {
    pub name: Ident,
    pub ty: TypeRef,
    pub init: Option<Expr>,
    pub comments: Vec<Comment>,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ElementaryType {
    Bool,
    Int,
    Dint,
    Real,
    Time,
    String,
}

impl ElementaryType {
    pub const ALL: [ElementaryType; 6] = [
        ElementaryType::Bool,
        ElementaryType::Int,
        ElementaryType::Dint,
        ElementaryType::Real,
        ElementaryType::Time,
        ElementaryType::String,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ElementaryType::Bool => "BOOL",
            ElementaryType::Int => "INT",
            ElementaryType::Dint => "DINT",
            ElementaryType::Real => "REAL",
            ElementaryType::Time => "TIME",
            ElementaryType::String => "STRING",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(name))
    }
}

impl fmt::Display for ElementaryType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TypeKind {
    Elementary(ElementaryType),
    /// A function block type, user-defined or standard.
    Named(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypeRef {
    pub kind: TypeKind,
    pub span: SourceSpan,
}

impl TypeRef {
    pub fn elementary(ty: ElementaryType) -> Self {
        TypeRef {
            kind: TypeKind::Elementary(ty),
            span: SourceSpan::synthetic(),
        }
    }

    pub fn named(name: impl Into<String>) -> Self {
        TypeRef {
            kind: TypeKind::Named(name.into()),
            span: SourceSpan::synthetic(),
        }
    }

    pub fn display_name(&self) -> String {
        match &self.kind {
            TypeKind::Elementary(t) => t.name().to_string(),
            TypeKind::Named(n) => n.clone(),
        }
    }
}

/// A statement list plus comments that precede the list terminator.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Block {
    pub stmts: Vec<Stmt>,
    pub trailing_comments: Vec<Comment>,
}

impl Block {
    pub fn new(stmts: Vec<Stmt>) -> Self {
        Block {
            stmts,
            trailing_comments: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.stmts.is_empty() && self.trailing_comments.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub comments: Vec<Comment>,
    pub span: SourceSpan,
}

impl Stmt {
    pub fn new(kind: StmtKind) -> Self {
        Stmt {
            kind,
            comments: Vec::new(),
            span: SourceSpan::synthetic(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Assign {
        target: Expr,
        value: Expr,
    },
    If {
        /// `IF` branch followed by each `ELSIF`.
        branches: Vec<(Expr, Block)>,
        else_body: Option<Block>,
    },
    Case {
        selector: Expr,
        arms: Vec<CaseArm>,
        else_body: Option<Block>,
    },
    For {
        var: Ident,
        from: Expr,
        to: Expr,
        by: Option<Expr>,
        body: Block,
    },
    While {
        cond: Expr,
        body: Block,
    },
    Repeat {
        body: Block,
        until: Expr,
    },
    /// Function block call with named parameters.
    Invoke {
        instance: Ident,
        args: Vec<Arg>,
    },
    Exit,
    Return,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseArm {
    pub labels: Vec<CaseLabel>,
    pub body: Block,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseLabel {
    Value(i64),
    Range(i64, i64),
}

impl CaseLabel {
    pub fn matches(self, v: i64) -> bool {
        match self {
            CaseLabel::Value(x) => x == v,
            CaseLabel::Range(lo, hi) => lo <= v && v <= hi,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArgDirection {
    /// `name := expr`
    Input,
    /// `name => variable`
    Output,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Arg {
    pub name: Ident,
    pub direction: ArgDirection,
    pub value: Expr,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: SourceSpan,
}

impl Expr {
    pub fn new(kind: ExprKind) -> Self {
        Expr {
            kind,
            span: SourceSpan::synthetic(),
        }
    }

    pub fn var(name: &str) -> Self {
        Expr::new(ExprKind::Var(Ident::new(name)))
    }

    pub fn lit(lit: Literal) -> Self {
        Expr::new(ExprKind::Literal(lit))
    }

    pub fn binary(op: BinaryOp, lhs: Expr, rhs: Expr) -> Self {
        Expr::new(ExprKind::Binary {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Literal(Literal),
    Var(Ident),
    /// `instance.member`
    Member {
        base: Ident,
        member: Ident,
    },
    Unary {
        op: UnaryOp,
        operand: Box<Expr>,
    },
    Binary {
        op: BinaryOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Call {
        func: Ident,
        args: Vec<Expr>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Bool(bool),
    Int(i64),
    Real(f64),
    /// Milliseconds.
    Time(i64),
    String(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Or,
    Xor,
    And,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Add,
    Sub,
    Mul,
    Div,
    Mod,
}

impl BinaryOp {
    /// Binding strength; higher binds tighter. All binary operators are
    /// left-associative.
    pub fn precedence(self) -> u8 {
        match self {
            BinaryOp::Or => 1,
            BinaryOp::Xor => 2,
            BinaryOp::And => 3,
            BinaryOp::Eq | BinaryOp::Ne => 4,
            BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge => 5,
            BinaryOp::Add | BinaryOp::Sub => 6,
            BinaryOp::Mul | BinaryOp::Div | BinaryOp::Mod => 7,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Or => "OR",
            BinaryOp::Xor => "XOR",
            BinaryOp::And => "AND",
            BinaryOp::Eq => "=",
            BinaryOp::Ne => "<>",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Mod => "MOD",
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinaryOp::Eq | BinaryOp::Ne | BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge
        )
    }

    pub fn is_logical(self) -> bool {
        matches!(self, BinaryOp::And | BinaryOp::Or | BinaryOp::Xor)
    }

    pub fn is_arithmetic(self) -> bool {
        matches!(
            self,
            BinaryOp::Add | BinaryOp::Sub | BinaryOp::Mul | BinaryOp::Div | BinaryOp::Mod
        )
    }
}

/// Equality modulo spans and comments.
impl SourceUnit {
    pub fn structurally_eq(&self, other: &SourceUnit) -> bool {
        self.stripped() == other.stripped()
    }

    /// Copy with every span reset and every comment removed.
    pub fn stripped(&self) -> SourceUnit {
        let mut unit = self.clone();
        unit.strip();
        unit
    }

    pub fn find_pou(&self, name: &str) -> Option<&Pou> {
        self.pous.iter().find(|p| p.name.name.eq_ignore_ascii_case(name))
    }
}

impl Expr {
    /// Copy with every span reset.
    pub fn stripped(&self) -> Expr {
        let mut e = self.clone();
        e.strip();
        e
    }
}

impl Block {
    /// Copy with every span reset and every comment removed.
    pub fn stripped(&self) -> Block {
        let mut b = self.clone();
        b.strip();
        b
    }
}

trait Strip {
    fn strip(&mut self);
}

impl<T: Strip> Strip for Vec<T> {
    fn strip(&mut self) {
        self.iter_mut().for_each(Strip::strip);
    }
}

impl<T: Strip> Strip for Option<T> {
    fn strip(&mut self) {
        if let Some(x) = self {
            x.strip();
        }
    }
}

impl<T: Strip> Strip for Box<T> {
    fn strip(&mut self) {
        (**self).strip();
    }
}

impl Strip for SourceUnit {
    fn strip(&mut self) {
        self.pous.strip();
        self.trailing_comments.clear();
    }
}

impl Strip for Ident {
    fn strip(&mut self) {
        self.span = SourceSpan::synthetic();
    }
}

impl Strip for Pou {
    fn strip(&mut self) {
        self.name.strip();
        self.var_sections.strip();
        self.body.strip();
        self.comments.clear();
        self.span = SourceSpan::synthetic();
    }
}

impl Strip for VarSection {
    fn strip(&mut self) {
        self.decls.strip();
        self.trailing_comments.clear();
        self.span = SourceSpan::synthetic();
    }
}

impl Strip for VarDecl {
    fn strip(&mut self) {
        self.name.strip();
        self.ty.span = SourceSpan::synthetic();
        self.init.strip();
        self.comments.clear();
        self.span = SourceSpan::synthetic();
    }
}

impl Strip for Block {
    fn strip(&mut self) {
        self.stmts.strip();
        self.trailing_comments.clear();
    }
}

impl Strip for Stmt {
    fn strip(&mut self) {
        self.comments.clear();
        self.span = SourceSpan::synthetic();
        match &mut self.kind {
            StmtKind::Assign { target, value } => {
                target.strip();
                value.strip();
            }
            StmtKind::If {
                branches,
                else_body,
            } => {
                for (c, b) in branches {
                    c.strip();
                    b.strip();
                }
                else_body.strip();
            }
            StmtKind::Case {
                selector,
                arms,
                else_body,
            } => {
                selector.strip();
                for arm in arms {
                    arm.body.strip();
                    arm.span = SourceSpan::synthetic();
                }
                else_body.strip();
            }
            StmtKind::For {
                var,
                from,
                to,
                by,
                body,
            } => {
                var.strip();
                from.strip();
                to.strip();
                by.strip();
                body.strip();
            }
            StmtKind::While { cond, body } => {
                cond.strip();
                body.strip();
            }
            StmtKind::Repeat { body, until } => {
                body.strip();
                until.strip();
            }
            StmtKind::Invoke { instance, args } => {
                instance.strip();
                for a in args {
                    a.name.strip();
                    a.value.strip();
                    a.span = SourceSpan::synthetic();
                }
            }
            StmtKind::Exit | StmtKind::Return => {}
        }
    }
}

impl Strip for Expr {
    fn strip(&mut self) {
        self.span = SourceSpan::synthetic();
        match &mut self.kind {
            ExprKind::Literal(_) => {}
            ExprKind::Var(id) => id.strip(),
            ExprKind::Member { base, member } => {
                base.strip();
                member.strip();
            }
            ExprKind::Unary { operand, .. } => operand.strip(),
            ExprKind::Binary { lhs, rhs, .. } => {
                lhs.strip();
                rhs.strip();
            }
            ExprKind::Call { func, args } => {
                func.strip();
                args.strip();
            }
        }
    }
}

/// Read-only traversal helpers.
pub mod visit {
    use super::*;

    /// Visit every statement in `block`, depth first, pre-order.
    pub fn walk_stmts<'a>(block: &'a Block, f: &mut dyn FnMut(&'a Stmt)) {
        for stmt in &block.stmts {
            f(stmt);
            for child in child_blocks(stmt) {
                walk_stmts(child, f);
            }
        }
    }

    pub fn child_blocks(stmt: &Stmt) -> Vec<&Block> {
        match &stmt.kind {
            StmtKind::If {
                branches,
                else_body,
            } => branches
                .iter()
                .map(|(_, b)| b)
                .chain(else_body.iter())
                .collect(),
            StmtKind::Case {
                arms, else_body, ..
            } => arms
                .iter()
                .map(|a| &a.body)
                .chain(else_body.iter())
                .collect(),
            StmtKind::For { body, .. }
            | StmtKind::While { body, .. }
            | StmtKind::Repeat { body, .. } => vec![body],
            _ => Vec::new(),
        }
    }

    /// Expressions directly owned by `stmt` (not those of nested statements).
    pub fn stmt_exprs(stmt: &Stmt) -> Vec<&Expr> {
        match &stmt.kind {
            StmtKind::Assign { target, value } => vec![target, value],
            StmtKind::If { branches, .. } => branches.iter().map(|(c, _)| c).collect(),
            StmtKind::Case { selector, .. } => vec![selector],
            StmtKind::For { from, to, by, .. } => {
                let mut v = vec![from, to];
                v.extend(by.iter());
                v
            }
            StmtKind::While { cond, .. } => vec![cond],
            StmtKind::Repeat { until, .. } => vec![until],
            StmtKind::Invoke { args, .. } => args.iter().map(|a| &a.value).collect(),
            StmtKind::Exit | StmtKind::Return => Vec::new(),
        }
    }

    pub fn walk_expr<'a>(expr: &'a Expr, f: &mut dyn FnMut(&'a Expr)) {
        f(expr);
        match &expr.kind {
            ExprKind::Unary { operand, .. } => walk_expr(operand, f),
            ExprKind::Binary { lhs, rhs, .. } => {
                walk_expr(lhs, f);
                walk_expr(rhs, f);
            }
            ExprKind::Call { args, .. } => args.iter().for_each(|a| walk_expr(a, f)),
            _ => {}
        }
    }

    /// Every comment in the unit, in tree order.
    pub fn comments(unit: &SourceUnit) -> Vec<&Comment> {
        let mut out = Vec::new();
        for pou in &unit.pous {
            out.extend(pou.comments.iter());
            for sec in &pou.var_sections {
                for d in &sec.decls {
                    out.extend(d.comments.iter());
                }
                out.extend(sec.trailing_comments.iter());
            }
            block_comments(&pou.body, &mut out);
        }
        out.extend(unit.trailing_comments.iter());
        out
    }

    fn block_comments<'a>(block: &'a Block, out: &mut Vec<&'a Comment>) {
        for stmt in &block.stmts {
            out.extend(stmt.comments.iter());
            for child in child_blocks(stmt) {
                block_comments(child, out);
            }
        }
        out.extend(block.trailing_comments.iter());
    }
}
