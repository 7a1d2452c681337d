use std::fmt::Write as _;

use thiserror::Error;

use super::runtime::{ExecError, Runtime};
use super::value::Value;

/// Value applied by a scenario step.
#[derive(Debug, Clone, PartialEq)]
pub enum OverrideValue {
    Set(Value),
    /// Linear REAL ramp across the step's scan range, ending exactly at `to`
    /// on the last scan.
    Ramp { from: f64, to: f64 },
}

/// Overrides applied on every scan in `start..end` (absolute scan indices).
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub start: u64,
    pub end: u64,
    pub overrides: Vec<(String, OverrideValue)>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Scenario {
    pub steps: Vec<Step>,
}

impl Scenario {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn step(mut self, range: std::ops::Range<u64>, overrides: Vec<(&str, OverrideValue)>) -> Self {
        self.steps.push(Step {
            start: range.start,
            end: range.end,
            overrides: overrides.into_iter().map(|(n, v)| (n.to_string(), v)).collect(),
        });
        self
    }

    /// Ranges must be non-empty, ascending and non-overlapping.
    pub fn validate(&self) -> Result<(), String> {
        let mut prev_end = 0;
        for (i, s) in self.steps.iter().enumerate() {
            if s.start >= s.end {
                return Err(format!("step {} has an empty range {}..{}", i + 1, s.start, s.end));
            }
            if i > 0 && s.start < prev_end {
                return Err(format!("step {} overlaps or precedes the previous step", i + 1));
            }
            prev_end = s.end;
        }
        Ok(())
    }

    /// Overrides in force at absolute scan `scan`.
    pub fn overrides_at(&self, scan: u64) -> Vec<(String, Value)> {
        let Some(step) = self.steps.iter().find(|s| s.start <= scan && scan < s.end) else {
            return Vec::new();
        };
        step.overrides
            .iter()
            .map(|(name, v)| {
                let value = match v {
                    OverrideValue::Set(v) => v.clone(),
                    OverrideValue::Ramp { from, to } => {
                        let len = step.end - step.start;
                        let frac = if len <= 1 {
                            1.0
                        } else {
                            (scan - step.start) as f64 / (len - 1) as f64
                        };
                        Value::Real(from + (to - from) * frac)
                    }
                };
                (name.clone(), value)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub scan: u64,
    pub time_ms: i64,
    /// One value per watched name.
    pub values: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace {
    pub entry: String,
    pub cycle_ms: i64,
    pub watch: Vec<String>,
    pub scenario: Scenario,
    pub records: Vec<TraceRecord>,
}

impl SimulationTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Column of values for one watched name.
    pub fn column(&self, name: &str) -> Option<Vec<&Value>> {
        let i = self.watch.iter().position(|w| w.eq_ignore_ascii_case(name))?;
        Some(self.records.iter().map(|r| &r.values[i]).collect())
    }

    /// `scan=N time_ms=T name=value ...`, one line per record.
    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            let _ = write!(out, "scan={} time_ms={}", r.scan, r.time_ms);
            for (name, v) in self.watch.iter().zip(&r.values) {
                let _ = write!(out, " {name}={v}");
            }
            out.push('\n');
        }
        out
    }

    /// Columnar export with a `scan,time_ms,...` header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("scan,time_ms");
        for name in &self.watch {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for r in &self.records {
            let _ = write!(out, "{},{}", r.scan, r.time_ms);
            for v in &r.values {
                out.push(',');
                out.push_str(&csv_cell(v));
            }
            out.push('\n');
        }
        out
    }
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Bool(b) => (*b as u8).to_string(),
        Value::Time(ms) => ms.to_string(),
        Value::String(s) => format!("\"{}\"", s.replace('"', "\"\"")),
        other => other.to_string(),
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum RunError {
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error("unknown watch variable '{0}'")]
    UnknownWatch(String),
    /// Execution stopped; `partial` holds every completed scan.
    #[error("{error}")]
    Aborted {
        error: ExecError,
        partial: Box<SimulationTrace>,
    },
}

/// Execute `scans` scans, applying the scenario overrides in force at each
/// absolute scan index and recording `watch` after every scan.
pub fn run(rt: &mut Runtime, scenario: &Scenario, watch: &[String], scans: u64) -> Result<SimulationTrace, RunError> {
    scenario.validate().map_err(RunError::Scenario)?;
    for w in watch {
        if rt.get(w).is_none() {
            return Err(RunError::UnknownWatch(w.clone()));
        }
    }
    let mut trace = SimulationTrace {
        entry: rt.entry_name().to_string(),
        cycle_ms: rt.cycle_ms(),
        watch: watch.to_vec(),
        scenario: scenario.clone(),
        records: Vec::with_capacity(scans as usize),
    };
    for _ in 0..scans {
        let overrides = scenario.overrides_at(rt.scan_count());
        match rt.scan(&overrides) {
            Ok(res) => {
                let values = watch.iter().map(|w| rt.get(w).expect("validated watch")).collect();
                trace.records.push(TraceRecord {
                    scan: res.scan,
                    time_ms: res.time_ms,
                    values,
                });
            }
            Err(error) => {
                return Err(RunError::Aborted {
                    error,
                    partial: Box::new(trace),
                })
            }
        }
    }
    Ok(trace)
}
