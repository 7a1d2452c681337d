use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use stgen_core::syntax::ast::{PouKind, SourceUnit};
use stgen_core::syntax::parse_source;
use stgen_core::Diagnostic;

/// Creation stamp used when the caller does not supply one, so exports stay
/// byte-reproducible.
pub const EPOCH: &str = "1970-01-01T00:00:00";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum PouType {
    Program,
    FunctionBlock,
}

impl PouType {
    pub fn as_str(self) -> &'static str {
        match self {
            PouType::Program => "program",
            PouType::FunctionBlock => "functionBlock",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "program" => Some(PouType::Program),
            "functionBlock" => Some(PouType::FunctionBlock),
            _ => None,
        }
    }
}

impl From<PouKind> for PouType {
    fn from(k: PouKind) -> Self {
        match k {
            PouKind::Program => PouType::Program,
            PouKind::FunctionBlock => PouType::FunctionBlock,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PouEntry {
    pub name: String,
    pub kind: PouType,
    /// Where the POU came from, usually a `.st` file name.
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectManifest {
    pub name: String,
    pub entries: Vec<PouEntry>,
    pub created: String,
    pub cycle_ms: i64,
}

#[derive(Debug, Error, PartialEq)]
pub enum ManifestError {
    #[error("no POUs")]
    NoPous,
    #[error("duplicate POU name '{0}'")]
    Duplicate(String),
    #[error("project name must not be empty")]
    EmptyName,
    #[error("cycle time must be positive, got {0} ms")]
    BadCycle(i64),
    #[error("manifest lists '{0}' but the unit has no such POU")]
    Missing(String),
    #[error("'{name}' is a {actual} in the unit but the manifest says {listed}")]
    KindMismatch {
        name: String,
        listed: &'static str,
        actual: &'static str,
    },
    #[error("cannot parse '{source_ref}': {}", first_message(.diagnostics))]
    Parse {
        source_ref: String,
        diagnostics: Vec<Diagnostic>,
    },
}

pub(crate) fn first_message(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .find(|d| d.is_error())
        .or(diags.first())
        .map(|d| d.to_string())
        .unwrap_or_default()
}

impl ProjectManifest {
    pub fn new(name: impl Into<String>, cycle_ms: i64) -> Self {
        ProjectManifest {
            name: name.into(),
            entries: Vec::new(),
            created: EPOCH.to_string(),
            cycle_ms,
        }
    }

    pub fn validate(&self) -> Result<(), ManifestError> {
        if self.name.trim().is_empty() {
            return Err(ManifestError::EmptyName);
        }
        if self.cycle_ms <= 0 {
            return Err(ManifestError::BadCycle(self.cycle_ms));
        }
        if self.entries.is_empty() {
            return Err(ManifestError::NoPous);
        }
        let mut seen = BTreeSet::new();
        for e in &self.entries {
            if !seen.insert(e.name.to_ascii_uppercase()) {
                return Err(ManifestError::Duplicate(e.name.clone()));
            }
        }
        Ok(())
    }

    /// Validate and confirm every entry names a POU of the same kind in `unit`.
    pub fn validate_against(&self, unit: &SourceUnit) -> Result<(), ManifestError> {
        self.validate()?;
        for e in &self.entries {
            let pou = unit.find_pou(&e.name).ok_or_else(|| ManifestError::Missing(e.name.clone()))?;
            let actual = PouType::from(pou.kind);
            if actual != e.kind {
                return Err(ManifestError::KindMismatch {
                    name: e.name.clone(),
                    listed: e.kind.as_str(),
                    actual: actual.as_str(),
                });
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}

/// Parse each `(source_ref, text)` pair and collect every POU into one unit
/// with a manifest entry per POU, in input order.
pub fn assemble(
    name: &str,
    sources: &[(String, String)],
    cycle_ms: i64,
) -> Result<(ProjectManifest, SourceUnit), ManifestError> {
    let mut manifest = ProjectManifest::new(name, cycle_ms);
    let mut unit = SourceUnit::default();
    for (source_ref, text) in sources {
        let (parsed, diags) = parse_source(text);
        if diags.iter().any(Diagnostic::is_error) {
            return Err(ManifestError::Parse {
                source_ref: source_ref.clone(),
                diagnostics: diags,
            });
        }
        for pou in parsed.pous {
            manifest.entries.push(PouEntry {
                name: pou.name.name.clone(),
                kind: pou.kind.into(),
                source: source_ref.clone(),
            });
            unit.pous.push(pou);
        }
    }
    manifest.validate()?;
    Ok((manifest, unit))
}
