use proptest::prelude::*;

use stgen_core::syntax::ast::*;
use stgen_core::syntax::{parse_source, pretty_print, tokenize};

const NAMES: &[&str] = &["a", "Level", "x1", "Pump_2", "t", "q_out", "Ramp", "k"];
const FB_TYPES: &[&str] = &["TON", "PID", "R_TRIG", "Valve", "Mixer"];
const FUNCS: &[&str] = &["MIN", "MAX", "LIMIT", "ABS", "SQRT", "INT_TO_REAL"];

fn ident() -> impl Strategy<Value = Ident> {
    prop::sample::select(NAMES).prop_map(Ident::new)
}

fn literal() -> impl Strategy<Value = Literal> {
    prop_oneof![
        any::<bool>().prop_map(Literal::Bool),
        (-1_000_000i64..1_000_000).prop_map(Literal::Int),
        prop::num::f64::NORMAL.prop_map(Literal::Real),
        (-1e6f64..1e6).prop_map(Literal::Real),
        (0i64..400_000_000).prop_map(Literal::Time),
        "[ -~\t\n$'\"äß]{0,12}".prop_map(Literal::String),
    ]
}

fn expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        literal().prop_map(Expr::lit),
        ident().prop_map(|id| Expr::new(ExprKind::Var(id))),
        (ident(), prop::sample::select(&["Q", "ET", "OUT"][..]))
            .prop_map(|(b, m)| Expr::new(ExprKind::Member { base: b, member: Ident::new(m) })),
    ];
    leaf.prop_recursive(4, 32, 3, |inner| {
        let ops = prop::sample::select(vec![
            BinaryOp::Or,
            BinaryOp::Xor,
            BinaryOp::And,
            BinaryOp::Eq,
            BinaryOp::Ne,
            BinaryOp::Lt,
            BinaryOp::Le,
            BinaryOp::Gt,
            BinaryOp::Ge,
            BinaryOp::Add,
            BinaryOp::Sub,
            BinaryOp::Mul,
            BinaryOp::Div,
            BinaryOp::Mod,
        ]);
        prop_oneof![
            (ops, inner.clone(), inner.clone()).prop_map(|(op, l, r)| Expr::binary(op, l, r)),
            (prop::sample::select(vec![UnaryOp::Neg, UnaryOp::Not]), inner.clone())
                .prop_map(|(op, e)| Expr::new(ExprKind::Unary { op, operand: Box::new(e) })),
            (prop::sample::select(FUNCS), prop::collection::vec(inner, 1..4))
                .prop_map(|(f, args)| Expr::new(ExprKind::Call { func: Ident::new(f), args })),
        ]
    })
}

fn block_of(stmt: impl Strategy<Value = Stmt>) -> impl Strategy<Value = Block> {
    prop::collection::vec(stmt, 0..3).prop_map(Block::new)
}

fn case_label() -> impl Strategy<Value = CaseLabel> {
    prop_oneof![
        (-50i64..50).prop_map(CaseLabel::Value),
        (-50i64..50, 0i64..20).prop_map(|(lo, w)| CaseLabel::Range(lo, lo + w)),
    ]
}

fn stmt() -> impl Strategy<Value = Stmt> {
    let target = prop_oneof![
        3 => ident().prop_map(|id| Expr::new(ExprKind::Var(id))),
        1 => (ident(), ident()).prop_map(|(b, m)| Expr::new(ExprKind::Member { base: b, member: m })),
    ];
    let arg = (ident(), any::<bool>(), expr(), ident()).prop_map(|(name, out, e, v)| Arg {
        name,
        direction: if out { ArgDirection::Output } else { ArgDirection::Input },
        value: if out { Expr::new(ExprKind::Var(v)) } else { e },
        span: Default::default(),
    });
    let leaf = prop_oneof![
        (target, expr()).prop_map(|(target, value)| Stmt::new(StmtKind::Assign { target, value })),
        (ident(), prop::collection::vec(arg, 0..3))
            .prop_map(|(instance, args)| Stmt::new(StmtKind::Invoke { instance, args })),
        Just(Stmt::new(StmtKind::Exit)),
        Just(Stmt::new(StmtKind::Return)),
    ];
    leaf.prop_recursive(3, 24, 3, |inner| {
        prop_oneof![
            (
                prop::collection::vec((expr(), block_of(inner.clone())), 1..3),
                prop::option::of(block_of(inner.clone()))
            )
                .prop_map(|(branches, else_body)| Stmt::new(StmtKind::If { branches, else_body })),
            (
                expr(),
                prop::collection::vec(
                    (prop::collection::vec(case_label(), 1..3), block_of(inner.clone())),
                    1..3
                ),
                prop::option::of(block_of(inner.clone()))
            )
                .prop_map(|(selector, arms, else_body)| Stmt::new(StmtKind::Case {
                    selector,
                    arms: arms
                        .into_iter()
                        .map(|(labels, body)| CaseArm { labels, body, span: Default::default() })
                        .collect(),
                    else_body,
                })),
            (ident(), expr(), expr(), prop::option::of(expr()), block_of(inner.clone()))
                .prop_map(|(var, from, to, by, body)| Stmt::new(StmtKind::For { var, from, to, by, body })),
            (expr(), block_of(inner.clone()))
                .prop_map(|(cond, body)| Stmt::new(StmtKind::While { cond, body })),
            (block_of(inner), expr()).prop_map(|(body, until)| Stmt::new(StmtKind::Repeat { body, until })),
        ]
    })
}

fn type_ref() -> impl Strategy<Value = TypeRef> {
    prop_oneof![
        prop::sample::select(ElementaryType::ALL.to_vec()).prop_map(TypeRef::elementary),
        prop::sample::select(FB_TYPES).prop_map(TypeRef::named),
    ]
}

fn var_section() -> impl Strategy<Value = VarSection> {
    let decl = (ident(), type_ref(), prop::option::of(expr())).prop_map(|(name, ty, init)| VarDecl {
        name,
        ty,
        init,
        comments: vec![],
        span: Default::default(),
    });
    (
        prop::sample::select(vec![VarKind::Input, VarKind::Output, VarKind::InOut, VarKind::Local]),
        any::<bool>(),
        prop::collection::vec(decl, 0..4),
    )
        .prop_map(|(kind, constant, decls)| VarSection {
            kind,
            constant,
            decls,
            trailing_comments: vec![],
            span: Default::default(),
        })
}

fn unit() -> impl Strategy<Value = SourceUnit> {
    let pou = (
        any::<bool>(),
        prop::sample::select(&["Main", "Fb1", "Control_Loop"][..]),
        prop::collection::vec(var_section(), 0..3),
        block_of(stmt()),
        prop::option::of("[a-z ]{0,10}"),
    )
        .prop_map(|(fb, name, var_sections, body, comment)| Pou {
            kind: if fb { PouKind::FunctionBlock } else { PouKind::Program },
            name: Ident::new(name),
            var_sections,
            body,
            comments: comment.map(Comment::block).into_iter().collect(),
            span: Default::default(),
        });
    prop::collection::vec(pou, 1..3).prop_map(|pous| SourceUnit { pous, trailing_comments: vec![] })
}

/// Source-like noise: fragments of real syntax mixed with arbitrary text.
fn noisy_source() -> impl Strategy<Value = String> {
    let piece = prop_oneof![
        Just("PROGRAM ".to_string()),
        Just("END_PROGRAM".to_string()),
        Just(" := ".to_string()),
        Just("(*".to_string()),
        Just("*)".to_string()),
        Just("//".to_string()),
        Just("'".to_string()),
        Just("T#".to_string()),
        Just("16#".to_string()),
        Just("\n".to_string()),
        "[0-9.eE_#]{1,6}",
        "[a-zA-Z_]{1,6}",
        "\\PC{0,4}",
    ];
    prop::collection::vec(piece, 0..24).prop_map(|v| v.concat())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn print_then_parse_is_identity(u in unit()) {
        let text = pretty_print(&u);
        let (back, diags) = parse_source(&text);
        prop_assert!(diags.is_empty(), "{diags:#?}\n{text}");
        prop_assert_eq!(back.stripped(), u.stripped(), "\n{}", text);
    }

    #[test]
    fn printing_is_a_fixed_point(u in unit()) {
        let once = pretty_print(&u);
        let (back, _) = parse_source(&once);
        prop_assert_eq!(pretty_print(&back), once);
    }

    #[test]
    fn printed_comments_use_block_notation(u in unit()) {
        let text = pretty_print(&u);
        let (tokens, _) = tokenize(&text);
        for t in tokens.tokens {
            if let stgen_core::syntax::token::TokenKind::Comment(style) = t.kind {
                prop_assert_eq!(style, stgen_core::syntax::token::CommentStyle::Block);
            }
        }
    }

    #[test]
    fn lexer_is_total_and_lossless(src in noisy_source()) {
        let (tokens, diags) = tokenize(&src);
        prop_assert_eq!(tokens.reconstruct(), src.clone());
        let mut offset = 0;
        for t in &tokens.tokens {
            prop_assert_eq!(t.span.start.offset, offset);
            prop_assert!(t.span.start <= t.span.end);
            prop_assert_eq!(&src[t.span.start.offset..t.span.end.offset], t.lexeme.as_str());
            offset = t.span.end.offset;
        }
        prop_assert_eq!(offset, src.len());
        for d in diags {
            prop_assert!(d.span.start <= d.span.end && d.span.end.offset <= src.len());
        }
    }

    #[test]
    fn diagnostics_stay_in_bounds_and_parsing_is_deterministic(src in noisy_source()) {
        let (u1, d1) = parse_source(&src);
        let (u2, d2) = parse_source(&src);
        prop_assert_eq!(&u1, &u2);
        prop_assert_eq!(&d1, &d2);
        for d in &d1 {
            prop_assert!(d.span.start <= d.span.end);
            prop_assert!(d.span.end.offset <= src.len());
            prop_assert!(d.span.start.line >= 1 && d.span.start.column >= 1);
        }
        let analysis = stgen_core::analyze(&src);
        for d in &analysis.diagnostics {
            prop_assert!(d.span.end.offset <= src.len());
        }
    }
}
