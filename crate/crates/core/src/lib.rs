//! Structured Text (IEC 61131-3) toolchain core.
//!
//! The crate is split the way the code flows through it:
//!
//! - [`syntax`] lexes and parses `.st` sources into a [`syntax::ast::SourceUnit`]
//!   and prints units back to canonical text.
//! - [`sema`] resolves names, enforces the type rules and lints style issues.
//! - [`exec`] instantiates a checked unit and runs it under a cyclic scan model
//!   with the standard function blocks (PID, TON, TOF, R_TRIG, F_TRIG).
//!
//! All three stages report problems as [`Diagnostic`]s carrying stable codes.

pub mod diag;
pub mod exec;
pub mod sema;
pub mod syntax;

pub use diag::{Diagnostic, Severity};
pub use syntax::span::{Position, SourceSpan};

/// Result of running the whole front end (lex, parse, check, lint) over a source text.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub unit: syntax::ast::SourceUnit,
    pub symbols: sema::SymbolTable,
    pub diagnostics: Vec<Diagnostic>,
}

impl Analysis {
    pub fn has_errors(&self) -> bool {
        diag::has_errors(&self.diagnostics)
    }
}

/// Lex, parse, check and lint `source` in one go.
///
/// Checking only runs when parsing produced no errors; the checker assumes a
/// syntactically valid tree.
pub fn analyze(source: &str) -> Analysis {
    let (unit, mut diagnostics) = syntax::parse_source(source);
    let mut symbols = sema::SymbolTable::default();
    if !diag::has_errors(&diagnostics) {
        let (table, check_diags) = sema::check_unit(&unit);
        symbols = table;
        diagnostics.extend(check_diags);
        diagnostics.extend(sema::lint_style(&unit));
    }
    diag::sort(&mut diagnostics);
    Analysis {
        unit,
        symbols,
        diagnostics,
    }
}
