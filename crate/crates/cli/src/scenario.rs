//! Scenario files for `simulate`.
//!
//! ```toml
//! watch = ["Level", "HighLevelAlarm"]
//!
//! [[step]]
//! from = 0          # first scan, inclusive
//! to = 91           # last scan, exclusive
//! set = { Pressure = 2.0, Reset = false, Delay = "T#5s" }
//! ramp = { Level = [3.0, 3.9] }
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::Deserialize;

use stgen_core::exec::{OverrideValue, Runtime, Scenario, Step, Value};
use stgen_core::syntax::ast::ElementaryType;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub watch: Vec<String>,
    #[serde(default, rename = "step")]
    pub steps: Vec<StepFile>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepFile {
    pub from: u64,
    pub to: u64,
    #[serde(default)]
    pub set: BTreeMap<String, toml::Value>,
    #[serde(default)]
    pub ramp: BTreeMap<String, [f64; 2]>,
}

impl ScenarioFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read scenario '{}'", path.display()))?;
        toml::from_str(&text).with_context(|| format!("invalid scenario '{}'", path.display()))
    }

    /// Convert against the entry's declared variable types.
    pub fn to_scenario(&self, rt: &Runtime) -> Result<Scenario> {
        let vars = rt.variables();
        let ty_of = |name: &str| {
            vars.iter()
                .find(|(n, _, _)| n.eq_ignore_ascii_case(name))
                .map(|(_, t, _)| *t)
                .ok_or_else(|| anyhow!("scenario sets unknown variable '{name}'"))
        };
        let mut scenario = Scenario::new();
        for s in &self.steps {
            let mut overrides = Vec::new();
            for (name, v) in &s.set {
                overrides.push((name.clone(), OverrideValue::Set(convert(name, v, ty_of(name)?)?)));
            }
            for (name, [from, to]) in &s.ramp {
                if ty_of(name)? != ElementaryType::Real {
                    bail!("ramp on '{name}' needs a REAL variable");
                }
                overrides.push((name.clone(), OverrideValue::Ramp { from: *from, to: *to }));
            }
            scenario.steps.push(Step {
                start: s.from,
                end: s.to,
                overrides,
            });
        }
        scenario.validate().map_err(|e| anyhow!("invalid scenario: {e}"))?;
        Ok(scenario)
    }
}

fn convert(name: &str, v: &toml::Value, ty: ElementaryType) -> Result<Value> {
    let mismatch = || anyhow!("value {v} for '{name}' does not fit {ty}");
    match (v, ty) {
        (toml::Value::Boolean(b), ElementaryType::Bool) => Ok(Value::Bool(*b)),
        (toml::Value::Integer(i), ElementaryType::Real) => Ok(Value::Real(*i as f64)),
        (toml::Value::Integer(i), _) => Value::int_of(ty, *i).ok_or_else(mismatch),
        (toml::Value::Float(f), ElementaryType::Real) => Ok(Value::Real(*f)),
        (toml::Value::String(s), _) => Value::parse(s, ty).map_err(|e| anyhow!("'{name}': {e}")),
        _ => Err(mismatch()),
    }
}
