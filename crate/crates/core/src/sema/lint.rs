use std::collections::BTreeSet;

use super::stdlib::StdFb;
use crate::diag::{self, codes, Diagnostic};
use crate::syntax::ast::visit::{comments, stmt_exprs, walk_expr, walk_stmts};
use crate::syntax::ast::*;
use crate::syntax::token::CommentStyle;

/// Style lints: `//` comments, references to FB types defined neither in
/// the unit nor in the standard library, and unused local variables.
pub fn lint_style(unit: &SourceUnit) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for c in comments(unit) {
        if c.style == CommentStyle::Line {
            out.push(Diagnostic::lint(
                codes::LINE_COMMENT,
                "comment notation not supported by target importer; use (* ... *)",
                c.span,
            ));
        }
    }

    let local_fbs: BTreeSet<String> = unit
        .pous
        .iter()
        .filter(|p| p.kind == PouKind::FunctionBlock)
        .map(|p| p.name.key())
        .collect();

    for pou in &unit.pous {
        for (_, d) in pou.vars() {
            if let TypeKind::Named(name) = &d.ty.kind {
                if !local_fbs.contains(&name.to_ascii_uppercase()) && StdFb::lookup(name).is_none() {
                    out.push(Diagnostic::lint(
                        codes::NOT_SELF_CONTAINED,
                        format!(
                            "not self-contained: '{}' uses function block type '{name}' defined outside this unit",
                            pou.name
                        ),
                        d.ty.span,
                    ));
                }
            }
        }

        let used = used_names(pou);
        for (sec, d) in pou.vars() {
            if sec.kind == VarKind::Local && !used.contains(&d.name.key()) {
                out.push(Diagnostic::lint(
                    codes::UNUSED_VARIABLE,
                    format!("variable '{}' is declared but never used", d.name),
                    d.name.span,
                ));
            }
        }
    }
    diag::sort(&mut out);
    out
}

fn used_names(pou: &Pou) -> BTreeSet<String> {
    let mut used = BTreeSet::new();
    let note_expr = |e: &Expr, used: &mut BTreeSet<String>| {
        walk_expr(e, &mut |e| match &e.kind {
            ExprKind::Var(id) => {
                used.insert(id.key());
            }
            ExprKind::Member { base, .. } => {
                used.insert(base.key());
            }
            _ => {}
        });
    };
    walk_stmts(&pou.body, &mut |stmt| {
        match &stmt.kind {
            StmtKind::For { var, .. } => {
                used.insert(var.key());
            }
            StmtKind::Invoke { instance, .. } => {
                used.insert(instance.key());
            }
            _ => {}
        }
        for e in stmt_exprs(stmt) {
            note_expr(e, &mut used);
        }
    });
    used
}
