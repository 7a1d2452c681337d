use std::fmt;

use crate::syntax::ast::ElementaryType;
use crate::syntax::lexer::{format_duration, parse_duration};
use crate::syntax::printer::format_real;

pub const INT_RANGE: (i64, i64) = (i16::MIN as i64, i16::MAX as i64);
pub const DINT_RANGE: (i64, i64) = (i32::MIN as i64, i32::MAX as i64);

/// A runtime scalar. Integers are held as `i64` but always lie within the
/// range of their declared type.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Dint(i64),
    Real(f64),
    /// Milliseconds.
    Time(i64),
    String(String),
}

impl Value {
    pub fn default_for(ty: ElementaryType) -> Value {
        match ty {
            ElementaryType::Bool => Value::Bool(false),
            ElementaryType::Int => Value::Int(0),
            ElementaryType::Dint => Value::Dint(0),
            ElementaryType::Real => Value::Real(0.0),
            ElementaryType::Time => Value::Time(0),
            ElementaryType::String => Value::String(String::new()),
        }
    }

    pub fn ty(&self) -> ElementaryType {
        match self {
            Value::Bool(_) => ElementaryType::Bool,
            Value::Int(_) => ElementaryType::Int,
            Value::Dint(_) => ElementaryType::Dint,
            Value::Real(_) => ElementaryType::Real,
            Value::Time(_) => ElementaryType::Time,
            Value::String(_) => ElementaryType::String,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    /// Integer payload of INT, DINT and TIME values.
    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(v) | Value::Dint(v) | Value::Time(v) => Some(*v),
            _ => None,
        }
    }

    /// Numeric payload widened to REAL.
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(v) | Value::Dint(v) => Some(*v as f64),
            Value::Real(v) => Some(*v),
            _ => None,
        }
    }

    /// Build an integer value of type `ty`, or `None` if it does not fit.
    pub fn int_of(ty: ElementaryType, v: i64) -> Option<Value> {
        let ((lo, hi), make): ((i64, i64), fn(i64) -> Value) = match ty {
            ElementaryType::Int => (INT_RANGE, Value::Int),
            ElementaryType::Dint => (DINT_RANGE, Value::Dint),
            ElementaryType::Time => return Some(Value::Time(v)),
            _ => return None,
        };
        (lo..=hi).contains(&v).then(|| make(v))
    }

    /// Parse `text` as a literal of type `ty`.
    pub fn parse(text: &str, ty: ElementaryType) -> Result<Value, String> {
        let t = text.trim();
        let bad = || format!("'{t}' is not a valid {ty} value");
        match ty {
            ElementaryType::Bool => match t.to_ascii_uppercase().as_str() {
                "TRUE" | "1" => Ok(Value::Bool(true)),
                "FALSE" | "0" => Ok(Value::Bool(false)),
                _ => Err(bad()),
            },
            ElementaryType::Int | ElementaryType::Dint => {
                let v: i64 = t.replace('_', "").parse().map_err(|_| bad())?;
                Value::int_of(ty, v).ok_or_else(|| format!("{t} is out of range for {ty}"))
            }
            ElementaryType::Real => {
                let v: f64 = t.replace('_', "").parse().map_err(|_| bad())?;
                if v.is_finite() {
                    Ok(Value::Real(v))
                } else {
                    Err(bad())
                }
            }
            ElementaryType::Time => {
                let upper = t.to_ascii_uppercase();
                let body = upper
                    .strip_prefix("TIME#")
                    .or_else(|| upper.strip_prefix("T#"))
                    .ok_or_else(bad)?;
                parse_duration(body).map(Value::Time).ok_or_else(bad)
            }
            ElementaryType::String => Ok(Value::String(
                t.strip_prefix('\'')
                    .and_then(|s| s.strip_suffix('\''))
                    .unwrap_or(t)
                    .to_string(),
            )),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(true) => f.write_str("TRUE"),
            Value::Bool(false) => f.write_str("FALSE"),
            Value::Int(v) | Value::Dint(v) => write!(f, "{v}"),
            Value::Real(v) => f.write_str(&format_real(*v)),
            Value::Time(ms) => f.write_str(&format_duration(*ms)),
            Value::String(s) => write!(f, "'{s}'"),
        }
    }
}
