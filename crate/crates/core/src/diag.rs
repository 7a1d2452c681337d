//! Diagnostics shared by the lexer, parser, checker and linter.
//!
//! Codes are stable: the generation repair loop embeds them in follow-up
//! prompts, so renaming one is a breaking change.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::syntax::span::SourceSpan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
    Lint,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
            Severity::Lint => "lint",
        })
    }
}

/// Stable diagnostic codes.
pub mod codes {
    // lexical
    pub const UNTERMINATED_COMMENT: &str = "S001";
    pub const UNTERMINATED_STRING: &str = "S002";
    pub const MALFORMED_TIME: &str = "S003";
    pub const UNEXPECTED_CHAR: &str = "S004";
    pub const MALFORMED_NUMBER: &str = "S005";

    // syntax
    pub const EXPECTED_TOKEN: &str = "P001";
    pub const UNKNOWN_CONSTRUCT: &str = "P002";
    pub const OUTSIDE_POU: &str = "P003";

    // semantic
    pub const UNDECLARED: &str = "E001";
    pub const TYPE_MISMATCH: &str = "E002";
    pub const CONDITION_NOT_BOOL: &str = "E003";
    pub const UNKNOWN_FB_TYPE: &str = "E004";
    pub const FOREIGN_WRITE: &str = "E005";
    pub const DUPLICATE_DECL: &str = "E006";
    pub const NOT_AN_INSTANCE: &str = "E007";
    pub const UNKNOWN_PARAMETER: &str = "E008";
    pub const DUPLICATE_ARGUMENT: &str = "E009";
    pub const DUPLICATE_POU: &str = "E010";
    pub const CONSTANT_WRITE: &str = "E011";
    pub const EXIT_OUTSIDE_LOOP: &str = "E012";
    pub const INSTANCE_SECTION: &str = "E013";
    pub const RECURSIVE_INSTANCE: &str = "E014";
    pub const NOT_AN_OUTPUT: &str = "E015";
    pub const UNKNOWN_FUNCTION: &str = "E016";
    pub const ARITY: &str = "E017";
    pub const NOT_CONSTANT: &str = "E018";
    pub const TIME_MISUSE: &str = "E019";

    // lints
    pub const LINE_COMMENT: &str = "L001";
    pub const NOT_SELF_CONTAINED: &str = "L002";
    pub const UNUSED_VARIABLE: &str = "L003";
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: String,
    pub message: String,
    pub span: SourceSpan,
}

impl Diagnostic {
    pub fn new(
        severity: Severity,
        code: &str,
        message: impl Into<String>,
        span: SourceSpan,
    ) -> Self {
        Diagnostic {
            severity,
            code: code.to_string(),
            message: message.into(),
            span,
        }
    }

    pub fn error(code: &str, message: impl Into<String>, span: SourceSpan) -> Self {
        Self::new(Severity::Error, code, message, span)
    }

    pub fn warning(code: &str, message: impl Into<String>, span: SourceSpan) -> Self {
        Self::new(Severity::Warning, code, message, span)
    }

    pub fn lint(code: &str, message: impl Into<String>, span: SourceSpan) -> Self {
        Self::new(Severity::Lint, code, message, span)
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }

    /// `file:line:col: severity[code]: message`
    pub fn render(&self, file: &str) -> String {
        format!(
            "{}:{}:{}: {}[{}]: {}",
            file, self.span.start.line, self.span.start.column, self.severity, self.code, self.message
        )
    }

    pub fn record(&self) -> DiagnosticRecord {
        DiagnosticRecord {
            code: self.code.clone(),
            severity: self.severity,
            line: self.span.start.line,
            column: self.span.start.column,
            message: self.message.clone(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}: {}[{}]: {}",
            self.span.start.line, self.span.start.column, self.severity, self.code, self.message
        )
    }
}

/// Flat machine-readable form of a diagnostic, one JSON object per line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagnosticRecord {
    pub code: String,
    pub severity: Severity,
    pub line: u32,
    pub column: u32,
    pub message: String,
}

impl DiagnosticRecord {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("diagnostic record serializes")
    }

    pub fn from_line(line: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(line)
    }
}

/// Render diagnostics as line-delimited records.
pub fn render_records(diags: &[Diagnostic]) -> String {
    let mut out = String::new();
    for d in diags {
        out.push_str(&d.record().to_line());
        out.push('\n');
    }
    out
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(Diagnostic::is_error)
}

pub fn error_count(diags: &[Diagnostic]) -> usize {
    diags.iter().filter(|d| d.is_error()).count()
}

/// Order by span start, then code, then message. Stable for equal keys.
pub fn sort(diags: &mut [Diagnostic]) {
    diags.sort_by(|a, b| {
        (a.span.start.offset, a.span.end.offset, &a.code, &a.message)
            .cmp(&(b.span.start.offset, b.span.end.offset, &b.code, &b.message))
    });
}
