//! Recursive descent parser with statement-level error recovery.
//!
//! Errors are reported as diagnostics carrying an "expected ..." hint. After
//! an error the parser skips to the next `;` or block keyword and carries on,
//! so one pass surfaces every independent problem.

use super::ast::*;
use super::span::{Position, SourceSpan};
use super::token::{Keyword, Operator, Punct, Token, TokenKind, TokenStream};
use crate::diag::{codes, Diagnostic};

/// Marker for a failed production; the diagnostic has already been recorded.
struct Failed;

type PResult<T> = Result<T, Failed>;

struct Entry<'a> {
    tok: &'a Token,
    comments: Vec<Comment>,
}

struct Parser<'a> {
    entries: Vec<Entry<'a>>,
    eof_comments: Vec<Comment>,
    pos: usize,
    /// Comments of tokens consumed without being attached to a node.
    stash: Vec<Comment>,
    eof: Position,
    diags: Vec<Diagnostic>,
    last_end: Position,
}

fn to_comment(tok: &Token) -> Option<Comment> {
    let TokenKind::Comment(style) = tok.kind else {
        return None;
    };
    let text = match style {
        super::token::CommentStyle::Block => {
            tok.lexeme[2..tok.lexeme.len() - 2].to_string()
        }
        super::token::CommentStyle::Line => tok.lexeme[2..].trim_end_matches('\r').to_string(),
    };
    Some(Comment {
        style,
        text,
        span: tok.span,
    })
}

impl<'a> Parser<'a> {
    pub fn new(ts: &'a TokenStream) -> Self {
        let mut entries = Vec::new();
        let mut pending = Vec::new();
        for tok in &ts.tokens {
            match tok.kind {
                TokenKind::Whitespace => {}
                TokenKind::Comment(_) => pending.extend(to_comment(tok)),
                _ => entries.push(Entry {
                    tok,
                    comments: std::mem::take(&mut pending),
                }),
            }
        }
        Parser {
            entries,
            eof_comments: pending,
            pos: 0,
            stash: Vec::new(),
            eof: ts.eof,
            diags: Vec::new(),
            last_end: Position::start(),
        }
    }

    pub fn into_diagnostics(self) -> Vec<Diagnostic> {
        self.diags
    }

    // ---- token plumbing -------------------------------------------------

    fn peek(&self) -> Option<&'a Token> {
        self.entries.get(self.pos).map(|e| e.tok)
    }

    fn peek_nth(&self, n: usize) -> Option<&'a Token> {
        self.entries.get(self.pos + n).map(|e| e.tok)
    }

    fn at_end(&self) -> bool {
        self.pos >= self.entries.len()
    }

    fn bump(&mut self) -> &'a Token {
        let entry = &mut self.entries[self.pos];
        self.stash.append(&mut entry.comments);
        let tok = entry.tok;
        self.pos += 1;
        self.last_end = tok.span.end;
        tok
    }

    /// Comments waiting in front of the current token.
    fn take_comments(&mut self) -> Vec<Comment> {
        let mut out = std::mem::take(&mut self.stash);
        match self.entries.get_mut(self.pos) {
            Some(e) => out.append(&mut e.comments),
            None => out.append(&mut self.eof_comments),
        }
        out
    }

    fn current_span(&self) -> SourceSpan {
        match self.peek() {
            Some(t) => t.span,
            None => SourceSpan::point(self.eof),
        }
    }

    fn found(&self) -> String {
        match self.peek() {
            Some(t) => t.describe(),
            None => "end of input".to_string(),
        }
    }

    fn error_here(&mut self, code: &str, message: String) {
        let span = self.current_span();
        self.diags.push(Diagnostic::error(code, message, span));
    }

    fn expected(&mut self, what: &str) -> Failed {
        let msg = format!("expected {}, found {}", what, self.found());
        self.error_here(codes::EXPECTED_TOKEN, msg);
        Failed
    }

    fn check_kw(&self, kw: Keyword) -> bool {
        self.peek().is_some_and(|t| t.is_keyword(kw))
    }

    fn check_punct(&self, p: Punct) -> bool {
        self.peek().is_some_and(|t| t.is_punct(p))
    }

    fn check_op(&self, op: Operator) -> bool {
        self.peek().is_some_and(|t| t.is_op(op))
    }

    fn eat_kw(&mut self, kw: Keyword) -> bool {
        if self.check_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_punct(&mut self, p: Punct) -> bool {
        if self.check_punct(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: Keyword) -> PResult<&'a Token> {
        if self.check_kw(kw) {
            Ok(self.bump())
        } else {
            Err(self.expected(kw.as_str()))
        }
    }

    fn expect_punct(&mut self, p: Punct) -> PResult<&'a Token> {
        if self.check_punct(p) {
            Ok(self.bump())
        } else {
            Err(self.expected(&format!("'{}'", p.as_str())))
        }
    }

    fn expect_op(&mut self, op: Operator) -> PResult<&'a Token> {
        if self.check_op(op) {
            Ok(self.bump())
        } else {
            Err(self.expected(&format!("'{}'", op.as_str())))
        }
    }

    fn expect_ident(&mut self, what: &str) -> PResult<Ident> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Identifier => {
                self.bump();
                Ok(Ident {
                    name: t.lexeme.clone(),
                    span: t.span,
                })
            }
            _ => Err(self.expected(what)),
        }
    }

    fn span_from(&self, start: Position) -> SourceSpan {
        SourceSpan::new(start, self.last_end.max(start))
    }

    fn start_pos(&self) -> Position {
        self.current_span().start
    }

    // ---- recovery -------------------------------------------------------

    fn is_block_stop(tok: &Token) -> bool {
        matches!(
            tok.kind,
            TokenKind::Keyword(
                Keyword::EndIf
                    | Keyword::Elsif
                    | Keyword::Else
                    | Keyword::EndCase
                    | Keyword::EndFor
                    | Keyword::EndWhile
                    | Keyword::Until
                    | Keyword::EndRepeat
                    | Keyword::EndProgram
                    | Keyword::EndFunctionBlock
                    | Keyword::EndFunction
                    | Keyword::Program
                    | Keyword::FunctionBlock
                    | Keyword::Function
                    | Keyword::Var
                    | Keyword::VarInput
                    | Keyword::VarOutput
                    | Keyword::VarInOut
                    | Keyword::EndVar
            )
        )
    }

    /// Skip to just past the next `;`, or up to a block keyword.
    fn synchronize(&mut self, start_pos: usize) {
        if self.pos == start_pos && !self.at_end() && !Self::is_block_stop(self.peek().unwrap()) {
            self.bump();
        }
        while let Some(tok) = self.peek() {
            if tok.is_punct(Punct::Semicolon) {
                self.bump();
                return;
            }
            if Self::is_block_stop(tok) {
                return;
            }
            self.bump();
        }
    }

    // ---- units and POUs -------------------------------------------------

    pub fn parse_unit(&mut self) -> SourceUnit {
        let mut unit = SourceUnit::default();
        while let Some(tok) = self.peek() {
            match tok.kind {
                TokenKind::Keyword(Keyword::Program) | TokenKind::Keyword(Keyword::FunctionBlock) => {
                    if let Some(pou) = self.parse_pou() {
                        unit.pous.push(pou);
                    }
                }
                TokenKind::Keyword(Keyword::Function) => {
                    self.error_here(
                        codes::UNKNOWN_CONSTRUCT,
                        "FUNCTION POUs are not supported; use a FUNCTION_BLOCK".to_string(),
                    );
                    while let Some(t) = self.peek() {
                        self.bump();
                        if t.is_keyword(Keyword::EndFunction) {
                            break;
                        }
                    }
                }
                _ if self.starts_statement() => {
                    self.error_here(
                        codes::OUTSIDE_POU,
                        format!(
                            "statement outside of a PROGRAM or FUNCTION_BLOCK, found {}",
                            self.found()
                        ),
                    );
                    // Parse it anyway so errors inside it surface too.
                    let _ = self.parse_block(false);
                    if let Some(t) = self.peek() {
                        let header = t.is_keyword(Keyword::Program)
                            || t.is_keyword(Keyword::FunctionBlock)
                            || t.is_keyword(Keyword::Function);
                        if !header {
                            self.bump();
                        }
                    }
                }
                _ => {
                    let msg = format!("expected PROGRAM or FUNCTION_BLOCK, found {}", self.found());
                    self.error_here(codes::EXPECTED_TOKEN, msg);
                    self.bump();
                }
            }
        }
        unit.trailing_comments = self.take_comments();
        unit
    }

    fn parse_pou(&mut self) -> Option<Pou> {
        let comments = self.take_comments();
        let start = self.start_pos();
        let head = self.bump();
        let kind = if head.is_keyword(Keyword::Program) {
            PouKind::Program
        } else {
            PouKind::FunctionBlock
        };
        let end_kw = match kind {
            PouKind::Program => Keyword::EndProgram,
            PouKind::FunctionBlock => Keyword::EndFunctionBlock,
        };
        let name = match self.expect_ident("POU name") {
            Ok(n) => n,
            Err(Failed) => Ident {
                name: String::from("?"),
                span: self.current_span(),
            },
        };

        let mut var_sections = Vec::new();
        while let Some(tok) = self.peek() {
            let kind = match tok.kind {
                TokenKind::Keyword(Keyword::Var) => VarKind::Local,
                TokenKind::Keyword(Keyword::VarInput) => VarKind::Input,
                TokenKind::Keyword(Keyword::VarOutput) => VarKind::Output,
                TokenKind::Keyword(Keyword::VarInOut) => VarKind::InOut,
                _ => break,
            };
            var_sections.push(self.parse_var_section(kind));
        }

        let body = self.parse_block(false);
        if !self.eat_kw(end_kw) {
            self.expected(end_kw.as_str());
            // Leave a following POU header for the unit loop.
            if let Some(t) = self.peek() {
                if t.is_keyword(Keyword::EndProgram) || t.is_keyword(Keyword::EndFunctionBlock) {
                    self.bump();
                }
            }
        }
        Some(Pou {
            kind,
            name,
            var_sections,
            body,
            comments,
            span: self.span_from(start),
        })
    }

    fn parse_var_section(&mut self, kind: VarKind) -> VarSection {
        let start = self.start_pos();
        self.bump();
        let constant = self.eat_kw(Keyword::Constant);
        let mut decls = Vec::new();
        loop {
            match self.peek() {
                Some(t) if t.kind == TokenKind::Identifier => {
                    let before = self.pos;
                    match self.parse_var_decl(&mut decls) {
                        Ok(()) => {}
                        Err(Failed) => self.synchronize(before),
                    }
                }
                Some(t) if t.is_keyword(Keyword::EndVar) => break,
                Some(t) if Self::is_block_stop(t) || self.starts_statement() => break,
                Some(_) => {
                    let before = self.pos;
                    self.expected("variable declaration or END_VAR");
                    self.synchronize(before);
                }
                None => break,
            }
        }
        let trailing_comments = self.take_comments();
        if self.check_kw(Keyword::EndVar) {
            self.bump();
        } else {
            self.expected("END_VAR");
        }
        VarSection {
            kind,
            constant,
            decls,
            trailing_comments,
            span: self.span_from(start),
        }
    }

    fn parse_var_decl(&mut self, out: &mut Vec<VarDecl>) -> PResult<()> {
        let comments = self.take_comments();
        let start = self.start_pos();
        let mut names = vec![self.expect_ident("variable name")?];
        while self.eat_punct(Punct::Comma) {
            names.push(self.expect_ident("variable name")?);
        }
        self.expect_punct(Punct::Colon)?;
        let ty = self.parse_type()?;
        let init = if self.check_op(Operator::Assign) {
            self.bump();
            Some(self.parse_expr()?)
        } else {
            None
        };
        self.expect_punct(Punct::Semicolon)?;
        let span = self.span_from(start);
        for (i, name) in names.into_iter().enumerate() {
            out.push(VarDecl {
                name,
                ty: ty.clone(),
                init: init.clone(),
                comments: if i == 0 { comments.clone() } else { Vec::new() },
                span,
            });
        }
        Ok(())
    }

    fn parse_type(&mut self) -> PResult<TypeRef> {
        let id = self.expect_ident("type name")?;
        let kind = match ElementaryType::from_name(&id.name) {
            Some(t) => TypeKind::Elementary(t),
            None => TypeKind::Named(id.name.clone()),
        };
        if self.check_punct(Punct::LBracket) {
            self.error_here(
                codes::UNKNOWN_CONSTRUCT,
                "array and sized string types are not supported".to_string(),
            );
            return Err(Failed);
        }
        Ok(TypeRef { kind, span: id.span })
    }

    // ---- statements -----------------------------------------------------

    fn starts_statement(&self) -> bool {
        match self.peek() {
            Some(t) => matches!(
                t.kind,
                TokenKind::Identifier
                    | TokenKind::Punct(Punct::Semicolon)
                    | TokenKind::Keyword(
                        Keyword::If
                            | Keyword::Case
                            | Keyword::For
                            | Keyword::While
                            | Keyword::Repeat
                            | Keyword::Exit
                            | Keyword::Return
                    )
            ),
            None => false,
        }
    }

    fn starts_case_label(&self) -> bool {
        match self.peek() {
            Some(t) => matches!(
                t.kind,
                TokenKind::Integer(_) | TokenKind::Operator(Operator::Minus)
            ),
            None => false,
        }
    }

    /// Statements up to (not including) a block keyword or end of input.
    fn parse_block(&mut self, in_case: bool) -> Block {
        let mut stmts = Vec::new();
        loop {
            let Some(tok) = self.peek() else { break };
            if Self::is_block_stop(tok) || (in_case && self.starts_case_label()) {
                break;
            }
            if tok.is_punct(Punct::Semicolon) {
                self.bump();
                continue;
            }
            let before = self.pos;
            if !self.starts_statement() {
                self.expected("statement");
                self.synchronize(before);
                continue;
            }
            match self.parse_stmt() {
                Ok(s) => stmts.push(s),
                Err(Failed) => self.synchronize(before),
            }
        }
        Block {
            stmts,
            trailing_comments: self.take_comments(),
        }
    }

    fn parse_stmt(&mut self) -> PResult<Stmt> {
        let comments = self.take_comments();
        let start = self.start_pos();
        let tok = self.peek().expect("statement start");
        let kind = match tok.kind {
            TokenKind::Keyword(Keyword::If) => self.parse_if()?,
            TokenKind::Keyword(Keyword::Case) => self.parse_case()?,
            TokenKind::Keyword(Keyword::For) => self.parse_for()?,
            TokenKind::Keyword(Keyword::While) => self.parse_while()?,
            TokenKind::Keyword(Keyword::Repeat) => self.parse_repeat()?,
            TokenKind::Keyword(Keyword::Exit) => {
                self.bump();
                self.expect_punct(Punct::Semicolon)?;
                StmtKind::Exit
            }
            TokenKind::Keyword(Keyword::Return) => {
                self.bump();
                self.expect_punct(Punct::Semicolon)?;
                StmtKind::Return
            }
            TokenKind::Identifier => {
                if self.peek_nth(1).is_some_and(|t| t.is_punct(Punct::LParen)) {
                    self.parse_invoke()?
                } else {
                    self.parse_assign()?
                }
            }
            _ => return Err(self.expected("statement")),
        };
        Ok(Stmt {
            kind,
            comments,
            span: self.span_from(start),
        })
    }

    fn expect_end(&mut self, kw: Keyword) -> PResult<()> {
        self.expect_kw(kw)?;
        self.expect_punct(Punct::Semicolon)?;
        Ok(())
    }

    fn parse_if(&mut self) -> PResult<StmtKind> {
        self.bump();
        let mut branches = Vec::new();
        let cond = self.parse_expr()?;
        self.expect_kw(Keyword::Then)?;
        let body = self.parse_block(false);
        branches.push((cond, body));
        let mut else_body = None;
        loop {
            if self.eat_kw(Keyword::Elsif) {
                let cond = self.parse_expr()?;
                self.expect_kw(Keyword::Then)?;
                let body = self.parse_block(false);
                branches.push((cond, body));
            } else if self.eat_kw(Keyword::Else) {
                else_body = Some(self.parse_block(false));
                break;
            } else {
                break;
            }
        }
        self.expect_end(Keyword::EndIf)?;
        Ok(StmtKind::If {
            branches,
            else_body,
        })
    }

    fn parse_case_value(&mut self) -> PResult<i64> {
        let negative = if self.check_op(Operator::Minus) {
            self.bump();
            true
        } else {
            false
        };
        match self.peek().map(|t| &t.kind) {
            Some(TokenKind::Integer(v)) => {
                let v = *v;
                self.bump();
                Ok(if negative { -v } else { v })
            }
            _ => Err(self.expected("integer case label")),
        }
    }

    fn parse_case(&mut self) -> PResult<StmtKind> {
        self.bump();
        let selector = self.parse_expr()?;
        self.expect_kw(Keyword::Of)?;
        let mut arms = Vec::new();
        while self.starts_case_label() {
            let start = self.start_pos();
            let mut labels = Vec::new();
            loop {
                let lo = self.parse_case_value()?;
                if self.eat_punct(Punct::DotDot) {
                    let hi = self.parse_case_value()?;
                    labels.push(CaseLabel::Range(lo, hi));
                } else {
                    labels.push(CaseLabel::Value(lo));
                }
                if !self.eat_punct(Punct::Comma) {
                    break;
                }
            }
            self.expect_punct(Punct::Colon)?;
            let body = self.parse_block(true);
            arms.push(CaseArm {
                labels,
                body,
                span: self.span_from(start),
            });
        }
        let else_body = if self.eat_kw(Keyword::Else) {
            Some(self.parse_block(false))
        } else {
            None
        };
        self.expect_end(Keyword::EndCase)?;
        Ok(StmtKind::Case {
            selector,
            arms,
            else_body,
        })
    }

    fn parse_for(&mut self) -> PResult<StmtKind> {
        self.bump();
        let var = self.expect_ident("loop variable")?;
        self.expect_op(Operator::Assign)?;
        let from = self.parse_expr()?;
        self.expect_kw(Keyword::To)?;
        let to = self.parse_expr()?;
        let by = if self.eat_kw(Keyword::By) {
            Some(self.parse_expr()?)
        } else {
            None
        };
        self.expect_kw(Keyword::Do)?;
        let body = self.parse_block(false);
        self.expect_end(Keyword::EndFor)?;
        Ok(StmtKind::For {
            var,
            from,
            to,
            by,
            body,
        })
    }

    fn parse_while(&mut self) -> PResult<StmtKind> {
        self.bump();
        let cond = self.parse_expr()?;
        self.expect_kw(Keyword::Do)?;
        let body = self.parse_block(false);
        self.expect_end(Keyword::EndWhile)?;
        Ok(StmtKind::While { cond, body })
    }

    fn parse_repeat(&mut self) -> PResult<StmtKind> {
        self.bump();
        let body = self.parse_block(false);
        self.expect_kw(Keyword::Until)?;
        let until = self.parse_expr()?;
        self.expect_end(Keyword::EndRepeat)?;
        Ok(StmtKind::Repeat { body, until })
    }

    fn parse_invoke(&mut self) -> PResult<StmtKind> {
        let instance = self.expect_ident("function block instance")?;
        self.expect_punct(Punct::LParen)?;
        let mut args = Vec::new();
        if !self.check_punct(Punct::RParen) {
            loop {
                let start = self.start_pos();
                let name = self.expect_ident("parameter name")?;
                let direction = if self.check_op(Operator::Assign) {
                    self.bump();
                    ArgDirection::Input
                } else if self.check_op(Operator::OutputArrow) {
                    self.bump();
                    ArgDirection::Output
                } else {
                    return Err(self.expected("':=' or '=>' after parameter name"));
                };
                let value = match direction {
                    ArgDirection::Input => self.parse_expr()?,
                    ArgDirection::Output => self.parse_lvalue()?,
                };
                args.push(Arg {
                    name,
                    direction,
                    value,
                    span: self.span_from(start),
                });
                if !self.eat_punct(Punct::Comma) {
                    break;
                }
            }
        }
        self.expect_punct(Punct::RParen)?;
        self.expect_punct(Punct::Semicolon)?;
        Ok(StmtKind::Invoke { instance, args })
    }

    fn parse_lvalue(&mut self) -> PResult<Expr> {
        let start = self.start_pos();
        let base = self.expect_ident("variable")?;
        let kind = if self.eat_punct(Punct::Dot) {
            let member = self.expect_ident("member name")?;
            ExprKind::Member { base, member }
        } else {
            ExprKind::Var(base)
        };
        Ok(Expr {
            kind,
            span: self.span_from(start),
        })
    }

    fn parse_assign(&mut self) -> PResult<StmtKind> {
        let target = self.parse_lvalue()?;
        self.expect_op(Operator::Assign)?;
        let value = self.parse_expr()?;
        self.expect_punct(Punct::Semicolon)?;
        Ok(StmtKind::Assign { target, value })
    }

    // ---- expressions ----------------------------------------------------

    fn parse_expr(&mut self) -> PResult<Expr> {
        self.parse_binary(1)
    }

    fn peek_binary_op(&self) -> Option<BinaryOp> {
        let tok = self.peek()?;
        Some(match tok.kind {
            TokenKind::Keyword(Keyword::Or) => BinaryOp::Or,
            TokenKind::Keyword(Keyword::Xor) => BinaryOp::Xor,
            TokenKind::Keyword(Keyword::And) | TokenKind::Operator(Operator::Ampersand) => {
                BinaryOp::And
            }
            TokenKind::Operator(Operator::Eq) => BinaryOp::Eq,
            TokenKind::Operator(Operator::Ne) => BinaryOp::Ne,
            TokenKind::Operator(Operator::Lt) => BinaryOp::Lt,
            TokenKind::Operator(Operator::Le) => BinaryOp::Le,
            TokenKind::Operator(Operator::Gt) => BinaryOp::Gt,
            TokenKind::Operator(Operator::Ge) => BinaryOp::Ge,
            TokenKind::Operator(Operator::Plus) => BinaryOp::Add,
            TokenKind::Operator(Operator::Minus) => BinaryOp::Sub,
            TokenKind::Operator(Operator::Star) => BinaryOp::Mul,
            TokenKind::Operator(Operator::Slash) => BinaryOp::Div,
            TokenKind::Keyword(Keyword::Mod) => BinaryOp::Mod,
            _ => return None,
        })
    }

    fn parse_binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.parse_unary()?;
        while let Some(op) = self.peek_binary_op() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.bump();
            let rhs = self.parse_binary(prec + 1)?;
            let span = lhs.span.to(rhs.span);
            lhs = Expr {
                kind: ExprKind::Binary {
                    op,
                    lhs: Box::new(lhs),
                    rhs: Box::new(rhs),
                },
                span,
            };
        }
        Ok(lhs)
    }

    fn parse_unary(&mut self) -> PResult<Expr> {
        let start = self.start_pos();
        if self.check_op(Operator::Minus) {
            self.bump();
            // Fold a sign directly in front of a number into the literal.
            match self.peek().map(|t| t.kind.clone()) {
                Some(TokenKind::Integer(v)) => {
                    self.bump();
                    return Ok(Expr {
                        kind: ExprKind::Literal(Literal::Int(-v)),
                        span: self.span_from(start),
                    });
                }
                Some(TokenKind::Real(v)) => {
                    self.bump();
                    return Ok(Expr {
                        kind: ExprKind::Literal(Literal::Real(-v)),
                        span: self.span_from(start),
                    });
                }
                _ => {}
            }
            let operand = self.parse_unary()?;
            return Ok(Expr {
                kind: ExprKind::Unary {
                    op: UnaryOp::Neg,
                    operand: Box::new(operand),
                },
                span: self.span_from(start),
            });
        }
        if self.check_op(Operator::Plus) {
            self.bump();
            return self.parse_unary();
        }
        if self.eat_kw(Keyword::Not) {
            let operand = self.parse_unary()?;
            return Ok(Expr {
                kind: ExprKind::Unary {
                    op: UnaryOp::Not,
                    operand: Box::new(operand),
                },
                span: self.span_from(start),
            });
        }
        self.parse_primary()
    }

    fn parse_primary(&mut self) -> PResult<Expr> {
        let start = self.start_pos();
        let Some(tok) = self.peek() else {
            return Err(self.expected("expression"));
        };
        let lit = |l: Literal| ExprKind::Literal(l);
        let kind = match &tok.kind {
            TokenKind::Integer(v) => lit(Literal::Int(*v)),
            TokenKind::Real(v) => lit(Literal::Real(*v)),
            TokenKind::Time(v) => lit(Literal::Time(*v)),
            TokenKind::String(s) => lit(Literal::String(s.clone())),
            TokenKind::Keyword(Keyword::True) => lit(Literal::Bool(true)),
            TokenKind::Keyword(Keyword::False) => lit(Literal::Bool(false)),
            // Already reported by the lexer; stand in with a neutral literal.
            TokenKind::Error => lit(Literal::Int(0)),
            TokenKind::Punct(Punct::LParen) => {
                self.bump();
                let inner = self.parse_expr()?;
                self.expect_punct(Punct::RParen)?;
                return Ok(Expr {
                    kind: inner.kind,
                    span: self.span_from(start),
                });
            }
            TokenKind::Identifier => {
                let id = Ident {
                    name: tok.lexeme.clone(),
                    span: tok.span,
                };
                self.bump();
                let kind = if self.eat_punct(Punct::LParen) {
                    let mut args = Vec::new();
                    if !self.check_punct(Punct::RParen) {
                        loop {
                            args.push(self.parse_expr()?);
                            if !self.eat_punct(Punct::Comma) {
                                break;
                            }
                        }
                    }
                    self.expect_punct(Punct::RParen)?;
                    ExprKind::Call { func: id, args }
                } else if self.eat_punct(Punct::Dot) {
                    let member = self.expect_ident("member name")?;
                    ExprKind::Member { base: id, member }
                } else {
                    ExprKind::Var(id)
                };
                return Ok(Expr {
                    kind,
                    span: self.span_from(start),
                });
            }
            _ => return Err(self.expected("expression")),
        };
        self.bump();
        Ok(Expr {
            kind,
            span: self.span_from(start),
        })
    }
}

/// Parse a token stream into a unit. The unit holds everything that could be
/// recovered, even when diagnostics are present.
pub fn parse_unit(ts: &TokenStream) -> (SourceUnit, Vec<Diagnostic>) {
    let mut p = Parser::new(ts);
    let unit = p.parse_unit();
    (unit, p.into_diagnostics())
}

/// Parse a bare statement list, as stored in a PLCopen `<ST>` body.
pub fn parse_statements(ts: &TokenStream) -> (Block, Vec<Diagnostic>) {
    let mut p = Parser::new(ts);
    let mut block = p.parse_block(false);
    while !p.at_end() {
        p.expected("statement");
        p.bump();
        let rest = p.parse_block(false);
        block.stmts.extend(rest.stmts);
    }
    block.trailing_comments.extend(p.take_comments());
    (block, p.into_diagnostics())
}

/// Parse a single expression that must span the whole stream.
pub fn parse_expression(ts: &TokenStream) -> (Option<Expr>, Vec<Diagnostic>) {
    let mut p = Parser::new(ts);
    let expr = p.parse_expr().ok();
    if expr.is_some() && !p.at_end() {
        p.expected("end of expression");
    }
    (expr, p.into_diagnostics())
}
