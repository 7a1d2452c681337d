use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElementKind {
    Controller,
    Indicator,
    Transmitter,
    Valve,
    Vessel,
    Pump,
    /// Switches and other instruments outside the list above.
    Other,
}

impl ElementKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ElementKind::Controller => "controller",
            ElementKind::Indicator => "indicator",
            ElementKind::Transmitter => "transmitter",
            ElementKind::Valve => "valve",
            ElementKind::Vessel => "vessel",
            ElementKind::Pump => "pump",
            ElementKind::Other => "other",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s.trim().to_ascii_lowercase().trim_end_matches('s') {
            "controller" | "control point" | "control loop" => ElementKind::Controller,
            "indicator" => ElementKind::Indicator,
            "transmitter" | "sensor" => ElementKind::Transmitter,
            "valve" => ElementKind::Valve,
            "vessel" | "tank" | "column" => ElementKind::Vessel,
            "pump" => ElementKind::Pump,
            "other" | "switch" | "hand switch" => ElementKind::Other,
            _ => return None,
        })
    }
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quantity {
    Flow,
    Level,
    Pressure,
    Temperature,
    Other,
}

impl Quantity {
    pub fn as_str(self) -> &'static str {
        match self {
            Quantity::Flow => "flow",
            Quantity::Level => "level",
            Quantity::Pressure => "pressure",
            Quantity::Temperature => "temperature",
            Quantity::Other => "other",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s.trim().to_ascii_lowercase().as_str() {
            "flow" => Quantity::Flow,
            "level" => Quantity::Level,
            "pressure" => Quantity::Pressure,
            "temperature" => Quantity::Temperature,
            "other" | "" => Quantity::Other,
            _ => return None,
        })
    }

    fn from_letter(c: char) -> Option<Self> {
        match c {
            'F' => Some(Quantity::Flow),
            'L' => Some(Quantity::Level),
            'P' => Some(Quantity::Pressure),
            'T' => Some(Quantity::Temperature),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Element {
    pub tag: String,
    pub kind: ElementKind,
    pub quantity: Quantity,
}

/// Detected elements with unique tags, in answer order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElementList {
    elements: Vec<Element>,
}

impl ElementList {
    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn get(&self, tag: &str) -> Option<&Element> {
        self.elements.iter().find(|e| e.tag == tag)
    }

    /// Adds `e` unless its tag is already present.
    pub fn push(&mut self, e: Element) -> bool {
        if self.get(&e.tag).is_some() {
            return false;
        }
        self.elements.push(e);
        true
    }

    pub fn of_kind(&self, kind: ElementKind) -> ElementList {
        ElementList {
            elements: self.elements.iter().filter(|e| e.kind == kind).cloned().collect(),
        }
    }

    pub fn count_quantity(&self, q: Quantity) -> usize {
        self.elements.iter().filter(|e| e.quantity == q).count()
    }

    pub fn tags(&self) -> Vec<&str> {
        self.elements.iter().map(|e| e.tag.as_str()).collect()
    }
}

/// Leading letter code of an instrument tag such as `TICSA 4750.03` or
/// `FC-5`. Tags without at least two letters followed by a number yield `None`.
pub fn letter_code(tag: &str) -> Option<&str> {
    let tag = tag.trim();
    let end = tag.find(|c: char| !c.is_ascii_uppercase()).unwrap_or(tag.len());
    let rest = tag[end..].trim_start_matches([' ', '-', '_']);
    (end >= 2 && rest.starts_with(|c: char| c.is_ascii_digit())).then_some(&tag[..end])
}

/// Kind implied by the succeeding letters of an ISA-style code: any `C`
/// makes a controller, then `V` a valve, `T` a transmitter, `I` an indicator.
pub fn kind_from_letters(code: &str) -> ElementKind {
    let tail = &code[1..];
    if tail.contains('C') {
        ElementKind::Controller
    } else if tail.contains('V') {
        ElementKind::Valve
    } else if tail.contains('T') {
        ElementKind::Transmitter
    } else if tail.contains('I') {
        ElementKind::Indicator
    } else {
        ElementKind::Other
    }
}

/// Re-derive kind and quantity from the tag letters where the tag has a
/// letter code; other entries keep the model's answer.
pub fn apply_letter_heuristics(e: &Element) -> Element {
    match letter_code(&e.tag) {
        Some(code) => Element {
            tag: e.tag.clone(),
            kind: kind_from_letters(code),
            quantity: code.chars().next().and_then(Quantity::from_letter).unwrap_or(Quantity::Other),
        },
        None => e.clone(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedElements {
    pub list: ElementList,
    pub warnings: Vec<String>,
}

/// Parse `TAG | kind | quantity` lines. Blank lines, fences and a header row
/// are ignored; anything else that does not parse becomes a warning.
pub fn parse_element_lines(response: &str) -> ParsedElements {
    let mut list = ElementList::default();
    let mut warnings = Vec::new();
    for (n, raw) in response.lines().enumerate() {
        let line = raw.trim().trim_start_matches(['-', '*', '•']).trim();
        if line.is_empty() || line.starts_with("```") || line.chars().all(|c| matches!(c, '|' | '-' | ':' | ' ')) {
            continue;
        }
        let cells: Vec<&str> = line.trim_matches('|').split('|').map(str::trim).collect();
        if cells.len() >= 2 && cells[0].eq_ignore_ascii_case("tag") {
            continue;
        }
        let parsed = match cells.as_slice() {
            [tag, kind, rest @ ..] if !tag.is_empty() && rest.len() <= 1 => ElementKind::parse(kind).and_then(|k| {
                Quantity::parse(rest.first().copied().unwrap_or("")).map(|q| Element {
                    tag: tag.to_string(),
                    kind: k,
                    quantity: q,
                })
            }),
            _ => None,
        };
        match parsed {
            Some(e) => {
                let tag = e.tag.clone();
                if !list.push(e) {
                    warnings.push(format!("line {}: duplicate tag '{tag}' ignored", n + 1));
                }
            }
            None => warnings.push(format!("line {}: not an element: {}", n + 1, raw.trim())),
        }
    }
    if list.is_empty() {
        warnings.push("response lists no elements".to_string());
    }
    ParsedElements { list, warnings }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn letter_codes() {
        assert_eq!(letter_code("TICSA 4750.03"), Some("TICSA"));
        assert_eq!(letter_code("FC-5"), Some("FC"));
        assert_eq!(letter_code("HS 4750.01"), Some("HS"));
        assert_eq!(letter_code("E-7"), None);
        assert_eq!(letter_code("Column 1"), None);
        assert_eq!(letter_code("FIC"), None);
    }

    #[test]
    fn letter_heuristics() {
        assert_eq!(kind_from_letters("TICSA"), ElementKind::Controller);
        assert_eq!(kind_from_letters("PICSA"), ElementKind::Controller);
        assert_eq!(kind_from_letters("HS"), ElementKind::Other);
        assert_eq!(kind_from_letters("PI"), ElementKind::Indicator);
        assert_eq!(kind_from_letters("FT"), ElementKind::Transmitter);
        assert_eq!(kind_from_letters("FV"), ElementKind::Valve);
        assert_eq!(kind_from_letters("CT"), ElementKind::Transmitter);
    }

    #[test]
    fn heuristics_override_the_model() {
        let e = Element {
            tag: "HS 4750.01".into(),
            kind: ElementKind::Controller,
            quantity: Quantity::Level,
        };
        let fixed = apply_letter_heuristics(&e);
        assert_eq!(fixed.kind, ElementKind::Other);
        assert_eq!(fixed.quantity, Quantity::Other);
        let vessel = Element {
            tag: "E-7".into(),
            kind: ElementKind::Vessel,
            quantity: Quantity::Other,
        };
        assert_eq!(apply_letter_heuristics(&vessel), vessel);
    }

    #[test]
    fn parses_lines_and_warns() {
        let r = "Here is the list:\n| Tag | Kind | Quantity |\n|---|---|---|\n- FC-1 | controller | flow\nLC-1 | controller | level\nFC-1 | controller | flow\nP-101 | pump\n";
        let p = parse_element_lines(r);
        assert_eq!(p.list.tags(), vec!["FC-1", "LC-1", "P-101"]);
        assert_eq!(p.list.get("P-101").unwrap().quantity, Quantity::Other);
        assert_eq!(p.warnings.len(), 2);
        assert!(p.warnings[0].starts_with("line 1: not an element"));
        assert!(p.warnings[1].contains("duplicate tag 'FC-1'"));
    }

    #[test]
    fn empty_response_warns() {
        let p = parse_element_lines("");
        assert!(p.list.is_empty());
        assert_eq!(p.warnings, vec!["response lists no elements"]);
    }
}
