//! Plan files and the batch runner.
//!
//! ```toml
//! name = "eastman"
//!
//! [[group]]
//! id = "eastman"
//! tiles = ["../images/eastman.png"]   # relative to the plan file
//!
//! [[group.task]]
//! kind = "element_detection"
//! context = { filter = "controller" }
//!
//! [[group.task]]
//! kind = "control_loop"
//! targets = ["TC-1", "FC-5"]
//! ```

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use stgen_core::diag::DiagnosticRecord;
use stgen_core::syntax::parse_source;
use stgen_project::{write_st_files, Artifact, WriteError};

use crate::client::{ChatClient, ImageRef};
use crate::elements::{Element, ElementList};
use crate::pipeline::{gate_findings, Conversation, Pipeline};
use crate::task::{GenerationTask, TaskKind};
use crate::transcript::{Clock, Record, Status, Transcript};

pub const DEFAULT_WORKERS: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TileGroup {
    pub id: String,
    #[serde(default)]
    pub tiles: Vec<PathBuf>,
    #[serde(default, rename = "task")]
    pub tasks: Vec<GenerationTask>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    #[serde(default)]
    pub name: String,
    #[serde(default, rename = "group")]
    pub groups: Vec<TileGroup>,
}

impl Plan {
    pub fn parse(text: &str) -> Result<Self, BatchError> {
        toml::from_str(text).map_err(|e| BatchError::Plan(e.to_string()))
    }

    /// Parse and resolve tile paths against the plan file's directory.
    pub fn load(path: &Path) -> Result<Self, BatchError> {
        let text = fs::read_to_string(path).map_err(|source| BatchError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut plan = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for g in &mut plan.groups {
            for t in g.tiles.iter_mut().chain(g.tasks.iter_mut().flat_map(|t| t.tiles.iter_mut())) {
                if t.is_relative() {
                    *t = base.join(&*t);
                }
            }
        }
        Ok(plan)
    }

    /// Give `tiles` to every group that has none.
    pub fn with_default_tiles(mut self, tiles: &[PathBuf]) -> Self {
        for g in &mut self.groups {
            if g.tiles.is_empty() {
                g.tiles = tiles.to_vec();
            }
        }
        self
    }

    pub fn task_count(&self) -> usize {
        self.groups.iter().map(|g| g.tasks.len()).sum()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("plan serializes")
    }
}

#[derive(Debug, Error)]
pub enum BatchError {
    #[error("empty plan")]
    EmptyPlan,
    #[error("invalid plan: {0}")]
    Plan(String),
    #[error("cannot access '{path}': {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskReport {
    pub id: String,
    pub group: String,
    pub kind: TaskKind,
    pub targets: Vec<String>,
    pub status: Status,
    pub rounds: u32,
    pub low_confidence: bool,
    pub pous: Vec<String>,
    pub diagnostics: Vec<DiagnosticRecord>,
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elements: Option<Vec<Element>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationReport {
    pub plan: String,
    pub accepted: usize,
    pub failed: usize,
    pub files: Vec<String>,
    pub tasks: Vec<TaskReport>,
}

impl GenerationReport {
    pub fn is_success(&self) -> bool {
        self.failed == 0
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn render_text(&self) -> String {
        let mut out = format!(
            "plan {}: {} accepted, {} failed, {} file(s)\n",
            self.plan,
            self.accepted,
            self.failed,
            self.files.len()
        );
        for t in &self.tasks {
            let status = match t.status {
                Status::Accepted => "accepted",
                Status::Failed => "FAILED",
            };
            out.push_str(&format!("{:<32} {:<18} {:<8} rounds={}", t.id, t.kind.as_str(), status, t.rounds));
            if t.low_confidence {
                out.push_str(" low-confidence");
            }
            if !t.pous.is_empty() {
                out.push_str(&format!(" pous={}", t.pous.join(",")));
            }
            if let Some(els) = &t.elements {
                out.push_str(&format!(" elements={}", els.len()));
            }
            out.push('\n');
            if let Some(e) = &t.error {
                out.push_str(&format!("    error: {e}\n"));
            }
            for d in &t.diagnostics {
                out.push_str(&format!("    {}:{}: {}[{}]: {}\n", d.line, d.column, d.severity, d.code, d.message));
            }
        }
        out
    }
}

pub struct BatchOptions {
    pub workers: usize,
    pub max_rounds: u32,
}

impl Default for BatchOptions {
    fn default() -> Self {
        BatchOptions {
            workers: DEFAULT_WORKERS,
            max_rounds: crate::pipeline::DEFAULT_MAX_ROUNDS,
        }
    }
}

pub struct TaskResult {
    pub report: TaskReport,
    pub transcript: Transcript,
    pub artifacts: Vec<Artifact>,
}

pub fn task_id(group: &str, index: usize, kind: TaskKind) -> String {
    format!("{group}-{:02}-{}", index + 1, kind.as_str())
}

fn failed(report: &mut TaskReport, transcript: &mut Transcript, detail: String) {
    report.status = Status::Failed;
    report.error = Some(detail.clone());
    transcript.push(Record::Status {
        status: Status::Failed,
        detail: Some(detail),
    });
}

/// Detection tasks run first, then generation tasks, all in one conversation.
/// Results come back in execution order.
pub fn run_group(pipeline: &Pipeline<'_>, group: &TileGroup) -> Vec<TaskResult> {
    let mut tiles = Vec::new();
    let mut load_error = None;
    for p in &group.tiles {
        match ImageRef::load(p) {
            Ok(img) => tiles.push(img),
            Err(e) => load_error = Some(format!("cannot read tile '{}': {e}", p.display())),
        }
    }
    let mut conv = Conversation::new(&group.id, tiles);
    let mut order: Vec<usize> = (0..group.tasks.len()).collect();
    order.sort_by_key(|&i| group.tasks[i].kind != TaskKind::ElementDetection);

    let mut detected: Option<ElementList> = None;
    let mut results: Vec<(usize, TaskResult)> = Vec::new();
    for i in order {
        let task = &group.tasks[i];
        let id = task_id(&group.id, i, task.kind);
        let mut transcript = Transcript::new();
        transcript.push(Record::Task {
            id: id.clone(),
            conversation: group.id.clone(),
            kind: task.kind,
            targets: task.targets.clone(),
            context: task.context.clone(),
            model: pipeline.client.config().model.clone(),
            sampling: pipeline.client.config().sampling.clone(),
        });
        let mut report = TaskReport {
            id: id.clone(),
            group: group.id.clone(),
            kind: task.kind,
            targets: task.targets.clone(),
            status: Status::Accepted,
            rounds: 0,
            low_confidence: false,
            pous: Vec::new(),
            diagnostics: Vec::new(),
            warnings: Vec::new(),
            error: None,
            elements: None,
        };
        let mut artifacts = Vec::new();
        if let Some(e) = &load_error {
            failed(&mut report, &mut transcript, e.clone());
        } else if task.kind == TaskKind::ElementDetection {
            match pipeline.detect_elements(&mut conv, task, &mut transcript) {
                Ok(list) => {
                    report.elements = Some(list.elements().to_vec());
                    if list.is_empty() {
                        report.low_confidence = true;
                    }
                    detected = Some(list);
                    transcript.push(Record::Status {
                        status: Status::Accepted,
                        detail: None,
                    });
                }
                Err(e) => failed(&mut report, &mut transcript, e.to_string()),
            }
        } else {
            run_generation(pipeline, &mut conv, task, &id, detected.as_ref(), &mut report, &mut transcript, &mut artifacts);
        }
        report.warnings = transcript.warnings().iter().map(|s| s.to_string()).collect();
        results.push((
            i,
            TaskResult {
                report,
                transcript,
                artifacts,
            },
        ));
    }
    results.into_iter().map(|(_, r)| r).collect()
}

#[allow(clippy::too_many_arguments)]
fn run_generation(
    pipeline: &Pipeline<'_>,
    conv: &mut Conversation,
    task: &GenerationTask,
    id: &str,
    detected: Option<&ElementList>,
    report: &mut TaskReport,
    transcript: &mut Transcript,
    artifacts: &mut Vec<Artifact>,
) {
    let candidate = match pipeline.generate(conv, task, transcript) {
        Ok(c) => c,
        Err(e) => return failed(report, transcript, e.to_string()),
    };
    let findings = gate_findings(&candidate);
    let outcome = match pipeline.repair(conv, &candidate, findings, transcript) {
        Ok(o) => o,
        Err(e) => return failed(report, transcript, e.to_string()),
    };
    report.rounds = outcome.rounds;
    report.diagnostics = outcome.findings.iter().map(|d| d.record()).collect();
    if !outcome.is_clean() {
        return failed(
            report,
            transcript,
            format!("{} finding(s) left after {} repair round(s)", outcome.findings.len(), outcome.rounds),
        );
    }
    let (unit, _) = parse_source(&outcome.code);
    if unit.pous.is_empty() {
        return failed(report, transcript, "candidate contains no POU".to_string());
    }
    let undetected = task.kind == TaskKind::ControlLoop
        && detected.is_some_and(|d| !d.is_empty() && task.targets.iter().any(|t| d.get(t).is_none()));
    report.low_confidence = outcome.rounds > 0 || undetected;
    report.pous = unit.pous.iter().map(|p| p.name.name.clone()).collect();
    artifacts.extend(unit.pous.into_iter().map(|pou| Artifact {
        pou,
        task_kind: task.kind.as_str().to_string(),
        transcript_id: id.to_string(),
    }));
    transcript.push(Record::Status {
        status: Status::Accepted,
        detail: None,
    });
}

/// Run every group with at most `options.workers` groups in flight.
/// Results keep plan order.
pub fn execute_plan(
    plan: &Plan,
    client: &dyn ChatClient,
    clock: &dyn Clock,
    options: &BatchOptions,
) -> Result<Vec<TaskResult>, BatchError> {
    if plan.task_count() == 0 {
        return Err(BatchError::EmptyPlan);
    }
    let mut seen = BTreeSet::new();
    for g in &plan.groups {
        if !seen.insert(g.id.as_str()) {
            return Err(BatchError::Plan(format!("duplicate group id '{}'", g.id)));
        }
    }
    let mut pipeline = Pipeline::new(client, clock);
    pipeline.max_rounds = options.max_rounds.max(1);
    let slots: Vec<Mutex<Vec<TaskResult>>> = plan.groups.iter().map(|_| Mutex::new(Vec::new())).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..options.workers.clamp(1, plan.groups.len().max(1)) {
            s.spawn(|| loop {
                let g = next.fetch_add(1, Ordering::SeqCst);
                let Some(group) = plan.groups.get(g) else { break };
                *slots[g].lock().expect("result slot") = run_group(&pipeline, group);
            });
        }
    });
    Ok(slots
        .into_iter()
        .flat_map(|m| m.into_inner().expect("result slot"))
        .collect())
}

fn write(path: PathBuf, text: &str) -> Result<(), BatchError> {
    fs::write(&path, text).map_err(|source| BatchError::Io { path, source })
}

/// Execute `plan` and write artifacts, transcripts and the report under `out`.
pub fn run_batch(
    plan: &Plan,
    client: &dyn ChatClient,
    clock: &dyn Clock,
    out: &Path,
    options: &BatchOptions,
) -> Result<GenerationReport, BatchError> {
    let mut results = execute_plan(plan, client, clock, options)?;
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| BatchError::Io { path, source }
    };
    let transcripts = out.join("transcripts");
    fs::create_dir_all(&transcripts).map_err(io(&transcripts))?;

    let mut taken = BTreeSet::new();
    let mut artifacts = Vec::new();
    for r in &mut results {
        let clash = r.artifacts.iter().find(|a| taken.contains(&a.pou.name.key())).map(|a| a.pou.name.name.clone());
        if let Some(name) = clash {
            r.artifacts.clear();
            r.report.pous.clear();
            failed(&mut r.report, &mut r.transcript, format!("POU '{name}' already produced by an earlier task"));
            continue;
        }
        for a in &r.artifacts {
            taken.insert(a.pou.name.key());
        }
        artifacts.extend(r.artifacts.iter().cloned());
    }

    let mut files = Vec::new();
    if !artifacts.is_empty() {
        let st_dir = out.join("st");
        let written = write_st_files(&artifacts, &st_dir).map_err(|e| match e {
            WriteError::Io { path, source } => BatchError::Io { path, source },
            other => BatchError::Plan(format!("accepted artifacts do not check together: {other}")),
        })?;
        files = written
            .iter()
            .map(|p| format!("st/{}", p.file_name().unwrap_or_default().to_string_lossy()))
            .collect();
    }

    for r in &results {
        write(transcripts.join(format!("{}.jsonl", r.report.id)), &r.transcript.to_jsonl())?;
    }
    let reports: Vec<TaskReport> = results.into_iter().map(|r| r.report).collect();
    let failed = reports.iter().filter(|r| r.status == Status::Failed).count();
    let report = GenerationReport {
        plan: plan.name.clone(),
        accepted: reports.len() - failed,
        failed,
        files,
        tasks: reports,
    };
    write(out.join("report.json"), &report.to_json())?;
    write(out.join("report.txt"), &report.render_text())?;
    write_plan_draft(plan, &report, out)?;
    Ok(report)
}

/// Write a draft plan derived from detection results, if any were found.
pub fn write_plan_draft(plan: &Plan, report: &GenerationReport, out: &Path) -> Result<Option<PathBuf>, BatchError> {
    let mut groups = Vec::new();
    for g in &plan.groups {
        let tags: Vec<&str> = report
            .tasks
            .iter()
            .filter(|t| t.group == g.id)
            .filter_map(|t| t.elements.as_ref())
            .flatten()
            .filter(|e| e.kind == crate::elements::ElementKind::Controller)
            .map(|e| e.tag.as_str())
            .collect();
        if !tags.is_empty() {
            groups.push(TileGroup {
                id: g.id.clone(),
                tiles: g.tiles.iter().map(|t| relative_to(t, out)).collect(),
                tasks: tags.iter().map(|t| GenerationTask::new(TaskKind::ControlLoop, &[t])).collect(),
            });
        }
    }
    if groups.is_empty() {
        return Ok(None);
    }
    let draft = Plan {
        name: format!("{}-draft", plan.name),
        groups,
    };
    let path = out.join("detected.plan");
    write(path.clone(), &draft.to_toml())?;
    Ok(Some(path))
}

/// `path` as seen from `dir`, when it lies inside it.
fn relative_to(path: &Path, dir: &Path) -> PathBuf {
    path.strip_prefix(dir).map(Path::to_path_buf).unwrap_or_else(|_| path.to_path_buf())
}
