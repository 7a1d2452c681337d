//! Lexing, parsing and printing of Structured Text.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod printer;
pub mod span;
pub mod token;

use crate::diag::{self, Diagnostic};

pub use lexer::tokenize;
pub use parser::parse_unit;
pub use printer::pretty_print;

/// Tokenize and parse `source`; lexer and parser diagnostics are merged and
/// ordered by position.
pub fn parse_source(source: &str) -> (ast::SourceUnit, Vec<Diagnostic>) {
    let (tokens, mut diags) = tokenize(source);
    let (unit, parse_diags) = parse_unit(&tokens);
    diags.extend(parse_diags);
    diag::sort(&mut diags);
    (unit, diags)
}

pub fn parse_statements(source: &str) -> (ast::Block, Vec<Diagnostic>) {
    let (tokens, mut diags) = tokenize(source);
    let (block, parse_diags) = parser::parse_statements(&tokens);
    diags.extend(parse_diags);
    diag::sort(&mut diags);
    (block, diags)
}

pub fn parse_expression(source: &str) -> (Option<ast::Expr>, Vec<Diagnostic>) {
    let (tokens, mut diags) = tokenize(source);
    let (expr, parse_diags) = parser::parse_expression(&tokens);
    diags.extend(parse_diags);
    diag::sort(&mut diags);
    (expr, diags)
}

#[cfg(test)]
mod tests {
    use super::ast::*;
    use super::*;
    use crate::diag::codes;

    fn parse_ok(src: &str) -> SourceUnit {
        let (unit, diags) = parse_source(src);
        assert!(diags.is_empty(), "unexpected diagnostics: {diags:#?}");
        unit
    }

    #[test]
    fn minimal_program() {
        let unit = parse_ok("PROGRAM Main VAR x : INT; END_VAR x := 1; END_PROGRAM");
        assert_eq!(unit.pous.len(), 1);
        let pou = &unit.pous[0];
        assert_eq!(pou.kind, PouKind::Program);
        assert_eq!(pou.name.name, "Main");
        assert_eq!(pou.vars().count(), 1);
        assert_eq!(pou.body.stmts.len(), 1);
        assert!(matches!(pou.body.stmts[0].kind, StmtKind::Assign { .. }));
    }

    #[test]
    fn missing_end_if_at_end_of_input() {
        let src = "IF a THEN b := 1;";
        let (_, diags) = parse_source(src);
        let d = diags
            .iter()
            .find(|d| d.message.contains("expected END_IF"))
            .expect("END_IF diagnostic");
        assert_eq!(d.span.start.offset, src.len());
        assert_eq!(d.span.end.offset, src.len());
    }

    #[test]
    fn missing_end_if_inside_program() {
        let (unit, diags) =
            parse_source("PROGRAM P VAR a : BOOL; b : INT; END_VAR IF a THEN b := 1; END_PROGRAM");
        assert_eq!(diags.len(), 1, "{diags:#?}");
        assert!(diags[0].message.starts_with("expected END_IF"));
        assert_eq!(unit.pous.len(), 1);
    }

    #[test]
    fn missing_end_var_and_end_program() {
        let (_, diags) = parse_source("PROGRAM P VAR a : BOOL; a := TRUE;");
        let msgs: Vec<_> = diags.iter().map(|d| d.message.as_str()).collect();
        assert!(msgs.iter().any(|m| m.starts_with("expected END_VAR")), "{msgs:?}");
        assert!(msgs.iter().any(|m| m.starts_with("expected END_PROGRAM")), "{msgs:?}");
    }

    #[test]
    fn recovers_to_report_several_errors() {
        let src = "PROGRAM P VAR a : INT; END_VAR a := ; a := 2 a := 3; a := (1; END_PROGRAM";
        let (unit, diags) = parse_source(src);
        assert!(diags.len() >= 2, "{diags:#?}");
        assert!(diags.iter().all(|d| d.code == codes::EXPECTED_TOKEN));
        assert_eq!(unit.pous.len(), 1);
    }

    #[test]
    fn precedence() {
        let (e, d) = parse_expression("a OR b AND NOT c = 1 + 2 * 3");
        assert!(d.is_empty());
        let e = e.unwrap();
        let ExprKind::Binary { op, rhs, .. } = &e.kind else { panic!() };
        assert_eq!(*op, BinaryOp::Or);
        let ExprKind::Binary { op, rhs, .. } = &rhs.kind else { panic!() };
        assert_eq!(*op, BinaryOp::And);
        // NOT binds tighter than '='
        let ExprKind::Binary { op, lhs, rhs } = &rhs.kind else { panic!() };
        assert_eq!(*op, BinaryOp::Eq);
        assert!(matches!(lhs.kind, ExprKind::Unary { op: UnaryOp::Not, .. }));
        let ExprKind::Binary { op, rhs, .. } = &rhs.kind else { panic!() };
        assert_eq!(*op, BinaryOp::Add);
        assert!(matches!(rhs.kind, ExprKind::Binary { op: BinaryOp::Mul, .. }));
    }

    #[test]
    fn left_associative_subtraction_round_trips() {
        let (e, _) = parse_expression("a - (b - c) - d");
        let e = e.unwrap();
        assert_eq!(printer::print_expr(&e), "a - (b - c) - d");
    }

    #[test]
    fn line_comment_printed_as_block_comment() {
        let unit = parse_ok("PROGRAM P VAR x : INT; END_VAR\n// note\nx := 1;\nEND_PROGRAM");
        let text = pretty_print(&unit);
        assert!(text.contains("(* note *)"), "{text}");
        assert!(!text.contains("//"));
    }

    #[test]
    fn empty_program_body() {
        let unit = parse_ok("PROGRAM Idle END_PROGRAM");
        assert_eq!(pretty_print(&unit), "PROGRAM Idle\nEND_PROGRAM\n");
    }

    #[test]
    fn multi_name_declarations_expand() {
        let unit = parse_ok("PROGRAM P VAR a, b : BOOL := TRUE; END_VAR END_PROGRAM");
        let names: Vec<_> = unit.pous[0].vars().map(|(_, d)| d.name.name.clone()).collect();
        assert_eq!(names, ["a", "b"]);
    }

    #[test]
    fn fb_invocation_with_output_binding() {
        let unit = parse_ok(
            "PROGRAM P VAR t : TON; q : BOOL; END_VAR t(IN := TRUE, PT := T#1s, Q => q); END_PROGRAM",
        );
        let StmtKind::Invoke { instance, args } = &unit.pous[0].body.stmts[0].kind else {
            panic!()
        };
        assert_eq!(instance.name, "t");
        assert_eq!(args.len(), 3);
        assert_eq!(args[2].direction, ArgDirection::Output);
    }

    #[test]
    fn function_pou_is_reported() {
        let (_, diags) = parse_source("FUNCTION F : INT F := 1; END_FUNCTION PROGRAM P END_PROGRAM");
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].code, codes::UNKNOWN_CONSTRUCT);
    }

    #[test]
    fn negative_literals_fold() {
        let (e, _) = parse_expression("-5");
        assert_eq!(e.unwrap().kind, ExprKind::Literal(Literal::Int(-5)));
        let neg = Expr::new(ExprKind::Unary {
            op: UnaryOp::Neg,
            operand: Box::new(Expr::lit(Literal::Int(5))),
        });
        let printed = printer::print_expr(&neg);
        let (back, _) = parse_expression(&printed);
        assert_eq!(back.unwrap().stripped(), neg.stripped(), "{printed}");
    }

    #[test]
    fn statement_list_parses() {
        let (block, diags) = parse_statements("a := 1;\nIF a > 0 THEN b := TRUE; END_IF;\n");
        assert!(diags.is_empty(), "{diags:?}");
        assert_eq!(block.stmts.len(), 2);
    }
}
