use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    ControlLoop,
    Interlock,
    Sequence,
    ElementDetection,
}

impl TaskKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::ControlLoop => "control_loop",
            TaskKind::Interlock => "interlock",
            TaskKind::Sequence => "sequence",
            TaskKind::ElementDetection => "element_detection",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskKind {
    type Err = PromptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "control_loop" => Ok(TaskKind::ControlLoop),
            "interlock" => Ok(TaskKind::Interlock),
            "sequence" => Ok(TaskKind::Sequence),
            "element_detection" => Ok(TaskKind::ElementDetection),
            other => Err(PromptError::UnknownKind(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationTask {
    pub kind: TaskKind,
    #[serde(default)]
    pub targets: Vec<String>,
    #[serde(default)]
    pub context: BTreeMap<String, String>,
    /// Extra images for this task only; group tiles are always attached.
    #[serde(default)]
    pub tiles: Vec<PathBuf>,
}

impl GenerationTask {
    pub fn new(kind: TaskKind, targets: &[&str]) -> Self {
        GenerationTask {
            kind,
            targets: targets.iter().map(|s| s.to_string()).collect(),
            context: BTreeMap::new(),
            tiles: Vec::new(),
        }
    }

    pub fn with(mut self, key: &str, value: &str) -> Self {
        self.context.insert(key.to_string(), value.to_string());
        self
    }

    fn flag(&self, key: &str) -> bool {
        self.context.get(key).is_some_and(|v| v == "true" || v == "yes")
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PromptError {
    #[error("unknown task kind '{0}'")]
    UnknownKind(String),
    #[error("{kind} task needs context key '{key}'")]
    MissingContext { kind: TaskKind, key: &'static str },
    #[error("{0} task needs at least one target tag")]
    MissingTargets(TaskKind),
    #[error("element_detection tasks take no target tags")]
    UnexpectedTargets,
}

/// Context keys consumed by the templates themselves.
const RESERVED: &[&str] = &["procedure", "filter", "refine"];

const COMMENT_RULE: &str = "Write comments in (* … *) notation only and never use //.";
const FENCE_RULE: &str = "Reply with the complete code in one fenced code block.";

fn join_tags(tags: &[String]) -> String {
    match tags {
        [] => String::new(),
        [one] => one.clone(),
        [init @ .., last] => format!("{} and {last}", init.join(", ")),
    }
}

fn extra_context(task: &GenerationTask) -> String {
    let lines: Vec<String> = task
        .context
        .iter()
        .filter(|(k, _)| !RESERVED.contains(&k.as_str()))
        .map(|(k, v)| format!("- {k}: {v}"))
        .collect();
    if lines.is_empty() {
        String::new()
    } else {
        format!("\n\nAdditional information:\n{}", lines.join("\n"))
    }
}

/// Deterministic prompt text for `task`.
pub fn render_prompt(task: &GenerationTask) -> Result<String, PromptError> {
    let body = match task.kind {
        TaskKind::ElementDetection => {
            if !task.targets.is_empty() {
                return Err(PromptError::UnexpectedTargets);
            }
            let what = task.context.get("filter").map(String::as_str).unwrap_or("element");
            format!(
                "List every {what} shown in the attached P&ID image. Answer with one line per element in the form \
                 `TAG | kind | quantity`, where kind is one of controller, indicator, transmitter, valve, vessel, pump \
                 and quantity is one of flow, level, pressure, temperature, other. Do not add any other text."
            )
        }
        TaskKind::ControlLoop => {
            if task.targets.is_empty() {
                return Err(PromptError::MissingTargets(task.kind));
            }
            format!(
                "Write one self-contained IEC 61131-3 Structured Text function block implementing the control loop \
                 with {}. Model each controller as a PID block with plausible tuning values. Use the tags of the \
                 connected sensors as variable names and declare them as input variables. Use the tags of the driven \
                 controllers or valves as variable names and declare them as output variables. {COMMENT_RULE} {FENCE_RULE}",
                join_tags(&task.targets)
            )
        }
        TaskKind::Interlock => {
            if task.targets.is_empty() {
                return Err(PromptError::MissingTargets(task.kind));
            }
            format!(
                "Based on the attached P&ID, provide the interlocks required for {} and implement them as one \
                 self-contained IEC 61131-3 Structured Text POU. Declare sensor signals as input variables and \
                 actuator commands as output variables, and keep alarm limits in a VAR CONSTANT section. \
                 {COMMENT_RULE} {FENCE_RULE}",
                join_tags(&task.targets)
            )
        }
        TaskKind::Sequence => {
            let procedure = task.context.get("procedure").ok_or(PromptError::MissingContext {
                kind: task.kind,
                key: "procedure",
            })?;
            let scope = if task.targets.is_empty() {
                String::new()
            } else {
                format!(" covering {}", join_tags(&task.targets))
            };
            let mut text = format!(
                "Implement the {procedure} procedure{scope} for the process in the attached P&ID as one \
                 self-contained IEC 61131-3 Structured Text PROGRAM. Model it as a state machine in which exactly \
                 one step is active at any time, and expose one BOOL output per step."
            );
            if task.flag("refine") {
                text.push_str(
                    " Use concrete numbers: analog opening ranges for the inlet valves, target flow rates during \
                     startup, and timings for gradually increasing fan speed and flow, realised with TON timers.",
                );
            }
            format!("{text} {COMMENT_RULE} {FENCE_RULE}")
        }
    };
    Ok(format!("{body}{}", extra_context(task)))
}
