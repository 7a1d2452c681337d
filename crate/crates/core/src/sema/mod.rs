//! Name resolution, type checking and style lints.

mod check;
mod lint;
pub mod stdlib;
pub mod types;

use std::collections::BTreeMap;

use crate::syntax::ast::{ElementaryType, PouKind, SourceUnit, TypeKind, VarKind};
use crate::syntax::span::SourceSpan;

pub use check::check_unit;
pub use lint::lint_style;
pub use stdlib::{Builtin, StdFb};
pub use types::{assignable, Ty};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolKind {
    Variable,
    FbInstance,
    /// User-defined function block type.
    FbType,
    StdlibFb,
    Function,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Symbol {
    /// Source spelling of the declaration.
    pub name: String,
    pub kind: SymbolKind,
    /// Declared type name; empty for functions.
    pub ty: String,
    pub section: Option<VarKind>,
    pub constant: bool,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scope {
    pub pou: String,
    pub kind: PouKind,
    /// Keyed by upper-case name.
    pub symbols: BTreeMap<String, Symbol>,
}

impl Scope {
    pub fn get(&self, name: &str) -> Option<&Symbol> {
        self.symbols.get(&name.to_ascii_uppercase())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SymbolTable {
    /// Function block types and functions visible everywhere.
    pub globals: BTreeMap<String, Symbol>,
    /// One scope per POU, keyed by upper-case POU name.
    pub scopes: BTreeMap<String, Scope>,
}

impl SymbolTable {
    pub fn scope(&self, pou: &str) -> Option<&Scope> {
        self.scopes.get(&pou.to_ascii_uppercase())
    }

    /// Look `name` up in the POU scope, then globally.
    pub fn resolve(&self, pou: &str, name: &str) -> Option<&Symbol> {
        let key = name.to_ascii_uppercase();
        self.scope(pou)
            .and_then(|s| s.symbols.get(&key))
            .or_else(|| self.globals.get(&key))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamRole {
    Input,
    Output,
    InOut,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub ty: ElementaryType,
    pub role: ParamRole,
}

/// Interface of a function block type.
#[derive(Debug, Clone, PartialEq)]
pub struct Signature {
    pub name: String,
    pub std: Option<StdFb>,
    pub params: Vec<Param>,
}

impl Signature {
    pub fn param(&self, name: &str) -> Option<&Param> {
        self.params.iter().find(|p| p.name.eq_ignore_ascii_case(name))
    }

    pub fn outputs(&self) -> impl Iterator<Item = &Param> {
        self.params.iter().filter(|p| p.role == ParamRole::Output)
    }
}

/// Interfaces of every function block type visible in `unit`, keyed by
/// upper-case type name. The first definition of a duplicated name wins.
pub fn signatures(unit: &SourceUnit) -> BTreeMap<String, Signature> {
    let mut out = BTreeMap::new();
    for fb in StdFb::ALL {
        let mut params = Vec::new();
        for (name, ty) in fb.inputs() {
            params.push(Param {
                name: name.to_string(),
                ty: *ty,
                role: ParamRole::Input,
            });
        }
        for (name, ty) in fb.outputs() {
            params.push(Param {
                name: name.to_string(),
                ty: *ty,
                role: ParamRole::Output,
            });
        }
        out.insert(
            fb.name().to_string(),
            Signature {
                name: fb.name().to_string(),
                std: Some(fb),
                params,
            },
        );
    }
    for pou in unit.pous.iter().filter(|p| p.kind == PouKind::FunctionBlock) {
        let key = pou.name.key();
        if out.contains_key(&key) {
            continue;
        }
        let params = pou
            .vars()
            .filter_map(|(sec, d)| {
                let role = match sec.kind {
                    VarKind::Input => ParamRole::Input,
                    VarKind::Output => ParamRole::Output,
                    VarKind::InOut => ParamRole::InOut,
                    VarKind::Local => return None,
                };
                let TypeKind::Elementary(ty) = d.ty.kind else {
                    return None;
                };
                Some(Param {
                    name: d.name.name.clone(),
                    ty,
                    role,
                })
            })
            .collect();
        out.insert(
            key,
            Signature {
                name: pou.name.name.clone(),
                std: None,
                params,
            },
        );
    }
    out
}
