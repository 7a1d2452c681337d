//! Standard function blocks and functions known to the checker.

use crate::syntax::ast::ElementaryType::{self, *};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StdFb {
    Pid,
    Ton,
    Tof,
    RTrig,
    FTrig,
}

impl StdFb {
    pub const ALL: [StdFb; 5] = [StdFb::Pid, StdFb::Ton, StdFb::Tof, StdFb::RTrig, StdFb::FTrig];

    pub fn name(self) -> &'static str {
        match self {
            StdFb::Pid => "PID",
            StdFb::Ton => "TON",
            StdFb::Tof => "TOF",
            StdFb::RTrig => "R_TRIG",
            StdFb::FTrig => "F_TRIG",
        }
    }

    pub fn lookup(name: &str) -> Option<StdFb> {
        Self::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(name))
    }

    pub fn inputs(self) -> &'static [(&'static str, ElementaryType)] {
        match self {
            StdFb::Pid => &[
                ("SP", Real),
                ("PV", Real),
                ("KP", Real),
                ("KI", Real),
                ("KD", Real),
                ("OUT_MIN", Real),
                ("OUT_MAX", Real),
                ("RESET", Bool),
            ],
            StdFb::Ton | StdFb::Tof => &[("IN", Bool), ("PT", Time)],
            StdFb::RTrig | StdFb::FTrig => &[("CLK", Bool)],
        }
    }

    pub fn outputs(self) -> &'static [(&'static str, ElementaryType)] {
        match self {
            StdFb::Pid => &[("OUT", Real)],
            StdFb::Ton | StdFb::Tof => &[("Q", Bool), ("ET", Time)],
            StdFb::RTrig | StdFb::FTrig => &[("Q", Bool)],
        }
    }
}

/// Built-in functions callable in expressions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builtin {
    Min,
    Max,
    Limit,
    Abs,
    Sqrt,
    /// `FROM_TO_TO` type conversion.
    Convert(ElementaryType, ElementaryType),
}

const CONVERTIBLE: [ElementaryType; 5] = [Bool, Int, Dint, Real, Time];

impl Builtin {
    pub fn lookup(name: &str) -> Option<Builtin> {
        let upper = name.to_ascii_uppercase();
        match upper.as_str() {
            "MIN" => return Some(Builtin::Min),
            "MAX" => return Some(Builtin::Max),
            "LIMIT" => return Some(Builtin::Limit),
            "ABS" => return Some(Builtin::Abs),
            "SQRT" => return Some(Builtin::Sqrt),
            _ => {}
        }
        let (from, to) = upper.split_once("_TO_")?;
        let from = ElementaryType::from_name(from)?;
        let to = ElementaryType::from_name(to)?;
        (from != to && CONVERTIBLE.contains(&from) && CONVERTIBLE.contains(&to))
            .then_some(Builtin::Convert(from, to))
    }
}
