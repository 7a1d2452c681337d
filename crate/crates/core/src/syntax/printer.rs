//! Canonical pretty printer.
//!
//! Keywords are upper case, indentation is four spaces, one declaration per
//! line, and every comment is emitted in `(* *)` notation. Parentheses are
//! inserted only where precedence requires them.

use std::fmt::Write as _;

use super::ast::*;
use super::lexer::format_duration;
use super::token::CommentStyle;

const INDENT: &str = "    ";

pub fn pretty_print(unit: &SourceUnit) -> String {
    let mut p = Printer::default();
    for (i, pou) in unit.pous.iter().enumerate() {
        if i > 0 {
            p.out.push('\n');
        }
        p.pou(pou);
    }
    p.comments(&unit.trailing_comments, 0);
    p.out
}

/// Print a single POU as a standalone unit.
pub fn print_pou(pou: &Pou) -> String {
    let mut p = Printer::default();
    p.pou(pou);
    p.out
}

/// Print a statement list at the given indentation depth.
pub fn print_block(block: &Block, depth: usize) -> String {
    let mut p = Printer::default();
    p.block(block, depth);
    p.out
}

pub fn print_expr(expr: &Expr) -> String {
    let mut s = String::new();
    write_expr(&mut s, expr);
    s
}

pub fn print_literal(lit: &Literal) -> String {
    match lit {
        Literal::Bool(true) => "TRUE".to_string(),
        Literal::Bool(false) => "FALSE".to_string(),
        Literal::Int(v) => v.to_string(),
        Literal::Real(v) => format_real(*v),
        Literal::Time(ms) => format_duration(*ms),
        Literal::String(s) => quote_string(s),
    }
}

/// Shortest round-tripping spelling that the lexer reads back as a REAL.
pub fn format_real(v: f64) -> String {
    let s = format!("{v:?}");
    if s.contains('.') || s.contains("inf") || s.contains("NaN") {
        return s;
    }
    match s.find('e') {
        Some(i) => format!("{}.0{}", &s[..i], &s[i..]),
        None => format!("{s}.0"),
    }
}

pub fn quote_string(s: &str) -> String {
    let mut out = String::from("'");
    for c in s.chars() {
        match c {
            '\'' => out.push_str("$'"),
            '$' => out.push_str("$$"),
            '\n' => out.push_str("$N"),
            '\r' => out.push_str("$R"),
            '\t' => out.push_str("$T"),
            '\u{c}' => out.push_str("$P"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "${:02X}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('\'');
    out
}

pub fn render_comment(c: &Comment) -> String {
    match c.style {
        CommentStyle::Block => format!("(*{}*)", c.text),
        CommentStyle::Line => format!("(*{} *)", c.text.replace("*)", "* )")),
    }
}

#[derive(Default)]
struct Printer {
    out: String,
}

impl Printer {
    fn line(&mut self, depth: usize, text: &str) {
        for _ in 0..depth {
            self.out.push_str(INDENT);
        }
        self.out.push_str(text);
        self.out.push('\n');
    }

    fn comments(&mut self, comments: &[Comment], depth: usize) {
        for c in comments {
            self.line(depth, &render_comment(c));
        }
    }

    fn pou(&mut self, pou: &Pou) {
        self.comments(&pou.comments, 0);
        self.line(0, &format!("{} {}", pou.kind.keyword(), pou.name));
        for sec in &pou.var_sections {
            let head = if sec.constant {
                format!("{} CONSTANT", sec.kind.keyword())
            } else {
                sec.kind.keyword().to_string()
            };
            self.line(0, &head);
            for d in &sec.decls {
                self.comments(&d.comments, 1);
                let mut text = format!("{} : {}", d.name, d.ty.display_name());
                if let Some(init) = &d.init {
                    text.push_str(" := ");
                    write_expr(&mut text, init);
                }
                text.push(';');
                self.line(1, &text);
            }
            self.comments(&sec.trailing_comments, 1);
            self.line(0, "END_VAR");
        }
        self.block(&pou.body, 1);
        self.line(0, pou.kind.end_keyword());
    }

    fn block(&mut self, block: &Block, depth: usize) {
        for stmt in &block.stmts {
            self.stmt(stmt, depth);
        }
        self.comments(&block.trailing_comments, depth);
    }

    fn stmt(&mut self, stmt: &Stmt, depth: usize) {
        self.comments(&stmt.comments, depth);
        match &stmt.kind {
            StmtKind::Assign { target, value } => {
                self.line(depth, &format!("{} := {};", print_expr(target), print_expr(value)));
            }
            StmtKind::If {
                branches,
                else_body,
            } => {
                for (i, (cond, body)) in branches.iter().enumerate() {
                    let kw = if i == 0 { "IF" } else { "ELSIF" };
                    self.line(depth, &format!("{kw} {} THEN", print_expr(cond)));
                    self.block(body, depth + 1);
                }
                if let Some(body) = else_body {
                    self.line(depth, "ELSE");
                    self.block(body, depth + 1);
                }
                self.line(depth, "END_IF;");
            }
            StmtKind::Case {
                selector,
                arms,
                else_body,
            } => {
                self.line(depth, &format!("CASE {} OF", print_expr(selector)));
                for arm in arms {
                    let labels: Vec<String> = arm
                        .labels
                        .iter()
                        .map(|l| match l {
                            CaseLabel::Value(v) => v.to_string(),
                            CaseLabel::Range(lo, hi) => format!("{lo}..{hi}"),
                        })
                        .collect();
                    self.line(depth + 1, &format!("{}:", labels.join(", ")));
                    self.block(&arm.body, depth + 2);
                }
                if let Some(body) = else_body {
                    self.line(depth, "ELSE");
                    self.block(body, depth + 1);
                }
                self.line(depth, "END_CASE;");
            }
            StmtKind::For {
                var,
                from,
                to,
                by,
                body,
            } => {
                let mut head = format!("FOR {} := {} TO {}", var, print_expr(from), print_expr(to));
                if let Some(by) = by {
                    head.push_str(" BY ");
                    write_expr(&mut head, by);
                }
                head.push_str(" DO");
                self.line(depth, &head);
                self.block(body, depth + 1);
                self.line(depth, "END_FOR;");
            }
            StmtKind::While { cond, body } => {
                self.line(depth, &format!("WHILE {} DO", print_expr(cond)));
                self.block(body, depth + 1);
                self.line(depth, "END_WHILE;");
            }
            StmtKind::Repeat { body, until } => {
                self.line(depth, "REPEAT");
                self.block(body, depth + 1);
                self.line(depth, &format!("UNTIL {}", print_expr(until)));
                self.line(depth, "END_REPEAT;");
            }
            StmtKind::Invoke { instance, args } => {
                let args: Vec<String> = args
                    .iter()
                    .map(|a| {
                        let arrow = match a.direction {
                            ArgDirection::Input => ":=",
                            ArgDirection::Output => "=>",
                        };
                        format!("{} {} {}", a.name, arrow, print_expr(&a.value))
                    })
                    .collect();
                self.line(depth, &format!("{}({});", instance, args.join(", ")));
            }
            StmtKind::Exit => self.line(depth, "EXIT;"),
            StmtKind::Return => self.line(depth, "RETURN;"),
        }
    }
}

const UNARY_PREC: u8 = 8;

fn expr_prec(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Binary { op, .. } => op.precedence(),
        ExprKind::Unary { .. } => UNARY_PREC,
        _ => u8::MAX,
    }
}

fn write_operand(out: &mut String, e: &Expr, parens: bool) {
    if parens {
        out.push('(');
        write_expr(out, e);
        out.push(')');
    } else {
        write_expr(out, e);
    }
}

fn write_expr(out: &mut String, e: &Expr) {
    match &e.kind {
        ExprKind::Literal(l) => out.push_str(&print_literal(l)),
        ExprKind::Var(id) => out.push_str(&id.name),
        ExprKind::Member { base, member } => {
            let _ = write!(out, "{base}.{member}");
        }
        ExprKind::Unary { op, operand } => {
            match op {
                UnaryOp::Neg => out.push('-'),
                UnaryOp::Not => out.push_str("NOT "),
            }
            // A sign in front of a bare number would be folded into the
            // literal by the parser.
            let unsigned_number = matches!(
                &operand.kind,
                ExprKind::Literal(Literal::Int(v)) if *v >= 0
            ) || matches!(
                &operand.kind,
                ExprKind::Literal(Literal::Real(v)) if v.is_sign_positive()
            );
            let parens = expr_prec(operand) < UNARY_PREC || (*op == UnaryOp::Neg && unsigned_number);
            write_operand(out, operand, parens);
        }
        ExprKind::Binary { op, lhs, rhs } => {
            let prec = op.precedence();
            write_operand(out, lhs, expr_prec(lhs) < prec);
            let _ = write!(out, " {} ", op.symbol());
            write_operand(out, rhs, expr_prec(rhs) <= prec);
        }
        ExprKind::Call { func, args } => {
            out.push_str(&func.name);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(out, a);
            }
            out.push(')');
        }
    }
}
