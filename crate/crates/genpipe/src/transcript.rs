//! Append-only task transcripts, stored as JSON lines.
//!
//! Record types (field `type`):
//!
//! - `task`: id, conversation, kind, targets, context, model, sampling
//! - `exchange`: conversation, prompt, images (file names), response, timestamp_ms
//! - `repair`: round, diagnostics sent, accepted
//! - `warning`: message
//! - `status`: `accepted` or `failed`, optional detail
//!
//! Credentials are never part of any record.

use std::collections::BTreeMap;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use stgen_core::diag::DiagnosticRecord;

use crate::mock::{MockEntry, MockScript};
use crate::task::TaskKind;

pub trait Clock: Send + Sync {
    fn now_ms(&self) -> u64;
}

pub struct SystemClock;

impl Clock for SystemClock {
    fn now_ms(&self) -> u64 {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or(0)
    }
}

pub struct FixedClock(pub u64);

impl Clock for FixedClock {
    fn now_ms(&self) -> u64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Accepted,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Record {
    Task {
        id: String,
        conversation: String,
        kind: TaskKind,
        targets: Vec<String>,
        context: BTreeMap<String, String>,
        model: String,
        sampling: BTreeMap<String, f64>,
    },
    Exchange {
        conversation: String,
        prompt: String,
        images: Vec<String>,
        response: String,
        timestamp_ms: u64,
    },
    Repair {
        round: u32,
        diagnostics: Vec<DiagnosticRecord>,
        accepted: bool,
    },
    Warning {
        message: String,
    },
    Status {
        status: Status,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        detail: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Transcript {
    records: Vec<Record>,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, r: Record) {
        self.records.push(r);
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn exchanges(&self) -> impl Iterator<Item = (&str, &str, &str)> {
        self.records.iter().filter_map(|r| match r {
            Record::Exchange {
                conversation,
                prompt,
                response,
                ..
            } => Some((conversation.as_str(), prompt.as_str(), response.as_str())),
            _ => None,
        })
    }

    pub fn status(&self) -> Option<Status> {
        self.records.iter().rev().find_map(|r| match r {
            Record::Status { status, .. } => Some(*status),
            _ => None,
        })
    }

    pub fn warnings(&self) -> Vec<&str> {
        self.records
            .iter()
            .filter_map(|r| match r {
                Record::Warning { message } => Some(message.as_str()),
                _ => None,
            })
            .collect()
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, String> {
        let mut t = Transcript::new();
        for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            t.push(serde_json::from_str(line).map_err(|e| format!("line {}: {e}", n + 1))?);
        }
        Ok(t)
    }

    /// Copy with every timestamp zeroed, for run-to-run comparison.
    pub fn masked(&self) -> Transcript {
        let records = self
            .records
            .iter()
            .cloned()
            .map(|mut r| {
                if let Record::Exchange { timestamp_ms, .. } = &mut r {
                    *timestamp_ms = 0;
                }
                r
            })
            .collect();
        Transcript { records }
    }
}

/// Strict script that answers every recorded prompt with its recorded
/// response, per conversation and in order.
pub fn replay_script(transcripts: &[Transcript]) -> MockScript {
    let mut script = MockScript::new(true);
    for t in transcripts {
        for (conversation, prompt, response) in t.exchanges() {
            script.entries.push(MockEntry {
                conversation: Some(conversation.to_string()),
                expect: vec![prompt.to_string()],
                response: response.to_string(),
            });
        }
    }
    script
}
