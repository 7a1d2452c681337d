use std::io;

use quick_xml::events::{BytesDecl, BytesText, Event};
use quick_xml::Writer;
use roxmltree::Node;
use thiserror::Error;

use stgen_core::syntax::ast::*;
use stgen_core::syntax::printer::{print_block, print_expr};
use stgen_core::syntax::span::SourceSpan;
use stgen_core::syntax::{parse_expression, parse_statements};
use stgen_core::Diagnostic;

use crate::gate::{quality_gate, Rejection};
use crate::manifest::{first_message, ManifestError, PouEntry, PouType, ProjectManifest, EPOCH};

pub const TC6_NS: &str = "http://www.plcopen.org/xml/tc6_0201";
pub const XHTML_NS: &str = "http://www.w3.org/1999/xhtml";
const SOURCE_DATA: &str = "urn:stgen:source";

#[derive(Debug, Error)]
pub enum ExportError {
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error("refusing to export: {}", describe(.0))]
    Rejected(Vec<Rejection>),
    #[error("xml writer: {0}")]
    Io(#[from] io::Error),
}

fn describe(rejected: &[Rejection]) -> String {
    rejected
        .iter()
        .map(|r| format!("{} ({})", r.pou, first_message(&r.diagnostics)))
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Error)]
pub enum ImportError {
    #[error("malformed XML: {0}")]
    Xml(String),
    #[error("unexpected document shape: {0}")]
    Shape(String),
    #[error("body of '{pou}' does not parse: {}", first_message(.diagnostics))]
    Body { pou: String, diagnostics: Vec<Diagnostic> },
    #[error(transparent)]
    Manifest(#[from] ManifestError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImportedProject {
    pub manifest: ProjectManifest,
    pub unit: SourceUnit,
    pub warnings: Vec<String>,
}

/// `PT0.1S` style duration used for task intervals.
pub fn iso_interval(ms: i64) -> String {
    let (secs, frac) = (ms / 1000, ms % 1000);
    if frac == 0 {
        format!("PT{secs}S")
    } else {
        let f = format!("{frac:03}");
        format!("PT{secs}.{}S", f.trim_end_matches('0'))
    }
}

pub fn parse_iso_interval(s: &str) -> Option<i64> {
    let body = s.strip_prefix("PT")?.strip_suffix('S')?;
    let (secs, frac) = body.split_once('.').unwrap_or((body, ""));
    if frac.len() > 3 || !frac.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let secs: i64 = secs.parse().ok()?;
    let frac_ms: i64 = if frac.is_empty() { 0 } else { format!("{frac:0<3}").parse().ok()? };
    Some(secs * 1000 + frac_ms)
}

fn section_tag(kind: VarKind) -> &'static str {
    match kind {
        VarKind::Input => "inputVars",
        VarKind::Output => "outputVars",
        VarKind::InOut => "inOutVars",
        VarKind::Local => "localVars",
    }
}

fn section_kind(tag: &str) -> Option<VarKind> {
    match tag {
        "inputVars" => Some(VarKind::Input),
        "outputVars" => Some(VarKind::Output),
        "inOutVars" => Some(VarKind::InOut),
        "localVars" => Some(VarKind::Local),
        _ => None,
    }
}

fn type_tag(ty: ElementaryType) -> &'static str {
    match ty {
        ElementaryType::String => "string",
        other => other.name(),
    }
}

type W = Writer<Vec<u8>>;

fn paragraphs(w: &mut W, tag: &str, comments: &[Comment]) -> io::Result<()> {
    if comments.is_empty() {
        return Ok(());
    }
    w.create_element(tag).write_inner_content(|w| {
        for c in comments {
            w.create_element("xhtml:p").write_text_content(BytesText::new(&c.text))?;
        }
        Ok(())
    })?;
    Ok(())
}

fn write_variable(w: &mut W, d: &VarDecl) -> io::Result<()> {
    w.create_element("variable")
        .with_attribute(("name", d.name.name.as_str()))
        .write_inner_content(|w| {
            w.create_element("type").write_inner_content(|w| {
                match &d.ty.kind {
                    TypeKind::Elementary(t) => w.create_element(type_tag(*t)).write_empty()?,
                    TypeKind::Named(n) => w.create_element("derived").with_attribute(("name", n.as_str())).write_empty()?,
                };
                Ok(())
            })?;
            if let Some(init) = &d.init {
                w.create_element("initialValue").write_inner_content(|w| {
                    w.create_element("simpleValue")
                        .with_attribute(("value", print_expr(init).as_str()))
                        .write_empty()?;
                    Ok(())
                })?;
            }
            paragraphs(w, "documentation", &d.comments)
        })?;
    Ok(())
}

fn write_pou(w: &mut W, pou: &Pou, entry: &PouEntry) -> io::Result<()> {
    w.create_element("pou")
        .with_attribute(("name", pou.name.name.as_str()))
        .with_attribute(("pouType", PouType::from(pou.kind).as_str()))
        .write_inner_content(|w| {
            w.create_element("interface").write_inner_content(|w| {
                for s in &pou.var_sections {
                    let mut el = w.create_element(section_tag(s.kind));
                    if s.constant {
                        el = el.with_attribute(("constant", "true"));
                    }
                    el.write_inner_content(|w| {
                        for d in &s.decls {
                            write_variable(w, d)?;
                        }
                        Ok(())
                    })?;
                }
                Ok(())
            })?;
            w.create_element("body").write_inner_content(|w| {
                w.create_element("ST").write_inner_content(|w| {
                    w.create_element("xhtml:p")
                        .write_text_content(BytesText::new(&print_block(&pou.body, 0)))?;
                    Ok(())
                })?;
                Ok(())
            })?;
            w.create_element("addData").write_inner_content(|w| {
                w.create_element("data")
                    .with_attribute(("name", SOURCE_DATA))
                    .with_attribute(("handleUnknown", "discard"))
                    .write_inner_content(|w| {
                        w.create_element("source").with_attribute(("ref", entry.source.as_str())).write_empty()?;
                        Ok(())
                    })?;
                Ok(())
            })?;
            paragraphs(w, "documentation", &pou.comments)
        })?;
    Ok(())
}

/// Render the manifest's POUs as a PLCopen TC6 project document. POUs are
/// emitted in manifest order; any POU with check errors blocks the export.
pub fn export_plcopen(manifest: &ProjectManifest, unit: &SourceUnit) -> Result<String, ExportError> {
    manifest.validate_against(unit)?;
    let pous: Vec<Pou> = manifest
        .entries
        .iter()
        .map(|e| unit.find_pou(&e.name).cloned().expect("validated entry"))
        .collect();
    let selected = SourceUnit {
        pous: pous.clone(),
        trailing_comments: Vec::new(),
    };
    quality_gate(&selected).map_err(ExportError::Rejected)?;

    let mut w = Writer::new_with_indent(Vec::new(), b' ', 2);
    w.write_event(Event::Decl(BytesDecl::new("1.0", Some("utf-8"), None)))?;
    w.create_element("project")
        .with_attribute(("xmlns", TC6_NS))
        .with_attribute(("xmlns:xhtml", XHTML_NS))
        .write_inner_content(|w| {
            w.create_element("fileHeader")
                .with_attribute(("companyName", "stgen"))
                .with_attribute(("productName", "stgen"))
                .with_attribute(("productVersion", env!("CARGO_PKG_VERSION")))
                .with_attribute(("creationDateTime", manifest.created.as_str()))
                .write_empty()?;
            w.create_element("contentHeader")
                .with_attribute(("name", manifest.name.as_str()))
                .with_attribute(("modificationDateTime", manifest.created.as_str()))
                .write_inner_content(|w| {
                    w.create_element("coordinateInfo").write_inner_content(|w| {
                        for lang in ["fbd", "ld", "sfc"] {
                            w.create_element(lang).write_inner_content(|w| {
                                w.create_element("scaling")
                                    .with_attribute(("x", "1"))
                                    .with_attribute(("y", "1"))
                                    .write_empty()?;
                                Ok(())
                            })?;
                        }
                        Ok(())
                    })?;
                    Ok(())
                })?;
            w.create_element("types").write_inner_content(|w| {
                w.create_element("dataTypes").write_empty()?;
                w.create_element("pous").write_inner_content(|w| {
                    for (pou, entry) in pous.iter().zip(&manifest.entries) {
                        write_pou(w, pou, entry)?;
                    }
                    Ok(())
                })?;
                Ok(())
            })?;
            w.create_element("instances").write_inner_content(|w| {
                w.create_element("configurations").write_inner_content(|w| {
                    w.create_element("configuration")
                        .with_attribute(("name", "config"))
                        .write_inner_content(|w| {
                            w.create_element("resource")
                                .with_attribute(("name", "resource1"))
                                .write_inner_content(|w| {
                                    w.create_element("task")
                                        .with_attribute(("name", "main"))
                                        .with_attribute(("priority", "0"))
                                        .with_attribute(("interval", iso_interval(manifest.cycle_ms).as_str()))
                                        .write_inner_content(|w| {
                                            for p in pous.iter().filter(|p| p.kind == PouKind::Program) {
                                                let inst = format!("{}_instance", p.name.name);
                                                w.create_element("pouInstance")
                                                    .with_attribute(("name", inst.as_str()))
                                                    .with_attribute(("typeName", p.name.name.as_str()))
                                                    .write_empty()?;
                                            }
                                            Ok(())
                                        })?;
                                    Ok(())
                                })?;
                            Ok(())
                        })?;
                    Ok(())
                })?;
                Ok(())
            })?;
            Ok(())
        })?;
    let mut out = String::from_utf8(w.into_inner()).expect("writer emits UTF-8");
    out.push('\n');
    Ok(out)
}

struct Importer {
    warnings: Vec<String>,
}

fn children<'a, 'i>(n: Node<'a, 'i>) -> impl Iterator<Item = Node<'a, 'i>> {
    n.children().filter(|c| c.is_element())
}

fn attr<'a>(n: Node<'a, '_>, name: &str) -> Result<&'a str, ImportError> {
    n.attribute(name)
        .ok_or_else(|| ImportError::Shape(format!("<{}> lacks attribute '{name}'", n.tag_name().name())))
}

fn text_of(n: Node) -> String {
    n.descendants().filter(|d| d.is_text()).filter_map(|d| d.text()).collect()
}

fn comments_of(doc: Node) -> Vec<Comment> {
    children(doc).map(|p| Comment::block(text_of(p))).collect()
}

impl Importer {
    fn unknown(&mut self, n: Node, parent: Node) {
        self.warnings.push(format!(
            "ignored unknown element <{}> in <{}>",
            n.tag_name().name(),
            parent.tag_name().name()
        ));
    }

    fn type_ref(&mut self, n: Node) -> Result<TypeRef, ImportError> {
        let inner = children(n)
            .next()
            .ok_or_else(|| ImportError::Shape("empty <type>".into()))?;
        let tag = inner.tag_name().name();
        if tag == "derived" {
            return Ok(TypeRef::named(attr(inner, "name")?));
        }
        ElementaryType::from_name(tag)
            .map(TypeRef::elementary)
            .ok_or_else(|| ImportError::Shape(format!("unsupported type <{tag}>")))
    }

    fn variable(&mut self, pou: &str, n: Node) -> Result<VarDecl, ImportError> {
        let mut decl = VarDecl {
            name: Ident::new(attr(n, "name")?),
            ty: TypeRef::elementary(ElementaryType::Bool),
            init: None,
            comments: Vec::new(),
            span: SourceSpan::synthetic(),
        };
        let mut typed = false;
        for c in children(n) {
            match c.tag_name().name() {
                "type" => {
                    decl.ty = self.type_ref(c)?;
                    typed = true;
                }
                "initialValue" => {
                    let simple = children(c)
                        .find(|s| s.tag_name().name() == "simpleValue")
                        .ok_or_else(|| ImportError::Shape("<initialValue> without <simpleValue>".into()))?;
                    let (expr, diags) = parse_expression(attr(simple, "value")?);
                    match expr {
                        Some(e) if diags.is_empty() => decl.init = Some(e.stripped()),
                        _ => {
                            return Err(ImportError::Body {
                                pou: pou.to_string(),
                                diagnostics: diags,
                            })
                        }
                    }
                }
                "documentation" => decl.comments = comments_of(c),
                _ => self.unknown(c, n),
            }
        }
        if !typed {
            return Err(ImportError::Shape(format!("variable '{}' has no <type>", decl.name)));
        }
        Ok(decl)
    }

    fn pou(&mut self, n: Node) -> Result<(Pou, String), ImportError> {
        let name = attr(n, "name")?.to_string();
        let kind = match PouType::parse(attr(n, "pouType")?) {
            Some(PouType::Program) => PouKind::Program,
            Some(PouType::FunctionBlock) => PouKind::FunctionBlock,
            None => return Err(ImportError::Shape(format!("'{name}' has unsupported pouType"))),
        };
        let mut pou = Pou {
            kind,
            name: Ident::new(&name),
            var_sections: Vec::new(),
            body: Block::default(),
            comments: Vec::new(),
            span: SourceSpan::synthetic(),
        };
        let mut source = format!("{name}.st");
        for c in children(n) {
            match c.tag_name().name() {
                "interface" => {
                    for s in children(c) {
                        let Some(kind) = section_kind(s.tag_name().name()) else {
                            self.unknown(s, c);
                            continue;
                        };
                        let mut decls = Vec::new();
                        for v in children(s) {
                            if v.tag_name().name() == "variable" {
                                decls.push(self.variable(&name, v)?);
                            } else {
                                self.unknown(v, s);
                            }
                        }
                        pou.var_sections.push(VarSection {
                            kind,
                            constant: s.attribute("constant") == Some("true"),
                            decls,
                            trailing_comments: Vec::new(),
                            span: SourceSpan::synthetic(),
                        });
                    }
                }
                "body" => {
                    let st = children(c)
                        .find(|b| b.tag_name().name() == "ST")
                        .ok_or_else(|| ImportError::Shape(format!("'{name}' has no ST body")))?;
                    let (block, diags) = parse_statements(&text_of(st));
                    if diags.iter().any(Diagnostic::is_error) {
                        return Err(ImportError::Body { pou: name, diagnostics: diags });
                    }
                    pou.body = block;
                }
                "addData" => {
                    for d in children(c) {
                        if d.attribute("name") == Some(SOURCE_DATA) {
                            if let Some(s) = children(d).find(|s| s.tag_name().name() == "source") {
                                source = attr(s, "ref")?.to_string();
                            }
                        } else {
                            self.unknown(d, c);
                        }
                    }
                }
                "documentation" => pou.comments = comments_of(c),
                _ => self.unknown(c, n),
            }
        }
        Ok((pou, source))
    }

    fn task_interval(&mut self, instances: Node) -> Option<i64> {
        let task = instances.descendants().find(|d| d.is_element() && d.tag_name().name() == "task")?;
        let interval = task.attribute("interval")?;
        let ms = parse_iso_interval(interval);
        if ms.is_none() {
            self.warnings.push(format!("unrecognized task interval '{interval}'"));
        }
        ms
    }
}

/// Rebuild the manifest and syntax trees from an exported document.
/// Unknown elements are skipped with a warning.
pub fn import_plcopen(xml: &str) -> Result<ImportedProject, ImportError> {
    let doc = roxmltree::Document::parse(xml).map_err(|e| ImportError::Xml(e.to_string()))?;
    let root = doc.root_element();
    if root.tag_name().name() != "project" {
        return Err(ImportError::Shape(format!("root element is <{}>", root.tag_name().name())));
    }
    let mut imp = Importer { warnings: Vec::new() };
    let mut manifest = ProjectManifest::new("", 0);
    manifest.created = EPOCH.to_string();
    let mut unit = SourceUnit::default();
    let mut cycle = None;
    for c in children(root) {
        match c.tag_name().name() {
            "fileHeader" => {
                if let Some(t) = c.attribute("creationDateTime") {
                    manifest.created = t.to_string();
                }
            }
            "contentHeader" => manifest.name = attr(c, "name")?.to_string(),
            "types" => {
                for t in children(c) {
                    match t.tag_name().name() {
                        "dataTypes" => {}
                        "pous" => {
                            for p in children(t) {
                                if p.tag_name().name() != "pou" {
                                    imp.unknown(p, t);
                                    continue;
                                }
                                let (pou, source) = imp.pou(p)?;
                                manifest.entries.push(PouEntry {
                                    name: pou.name.name.clone(),
                                    kind: pou.kind.into(),
                                    source,
                                });
                                unit.pous.push(pou);
                            }
                        }
                        _ => imp.unknown(t, c),
                    }
                }
            }
            "instances" => cycle = imp.task_interval(c),
            _ => imp.unknown(c, root),
        }
    }
    manifest.cycle_ms = cycle.unwrap_or_else(|| {
        imp.warnings.push("no task interval; assuming 100 ms".into());
        100
    });
    manifest.validate_against(&unit)?;
    Ok(ImportedProject {
        manifest,
        unit,
        warnings: imp.warnings,
    })
}
