use stgen_core::sema::check_unit;
use stgen_core::syntax::ast::SourceUnit;
use stgen_core::syntax::{parse_source, pretty_print};
use stgen_core::Diagnostic;

/// Errors that block one POU from leaving the toolchain.
#[derive(Debug, Clone, PartialEq)]
pub struct Rejection {
    pub pou: String,
    pub diagnostics: Vec<Diagnostic>,
}

/// Parse and check the canonical text of `unit`; every error is attributed
/// to the POU whose span contains it. Spans refer to `pretty_print(unit)`.
pub fn quality_gate(unit: &SourceUnit) -> Result<(), Vec<Rejection>> {
    let text = pretty_print(unit);
    let (reparsed, mut diags) = parse_source(&text);
    if !diags.iter().any(Diagnostic::is_error) {
        diags.extend(check_unit(&reparsed).1);
    }
    let mut rejected: Vec<Rejection> = Vec::new();
    for d in diags.into_iter().filter(Diagnostic::is_error) {
        let offset = d.span.start.offset;
        let owner = reparsed
            .pous
            .iter()
            .find(|p| p.span.start.offset <= offset && offset <= p.span.end.offset)
            .map(|p| p.name.name.clone())
            .unwrap_or_else(|| "<unit>".to_string());
        match rejected.iter_mut().find(|r| r.pou == owner) {
            Some(r) => r.diagnostics.push(d),
            None => rejected.push(Rejection {
                pou: owner,
                diagnostics: vec![d],
            }),
        }
    }
    if rejected.is_empty() {
        Ok(())
    } else {
        Err(rejected)
    }
}
