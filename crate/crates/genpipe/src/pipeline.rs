use std::collections::BTreeSet;

use thiserror::Error;

use stgen_core::diag::codes;
use stgen_core::{analyze, Diagnostic};

use crate::client::{send_with_retry, ChatClient, ChatRequest, ClientError, ImageRef, Message};
use crate::elements::{apply_letter_heuristics, parse_element_lines, ElementKind, ElementList};
use crate::extract::extract_st;
use crate::task::{render_prompt, GenerationTask, PromptError, TaskKind};
use crate::transcript::{Clock, Record, Transcript};

pub const DEFAULT_MAX_ROUNDS: u32 = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error("element detection needs at least one tile")]
    NoTiles,
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error("no code in response")]
    NoCode,
    #[error("{0} is not a code generation task")]
    NotGeneration(TaskKind),
    #[error("{0} is not a detection task")]
    NotDetection(TaskKind),
}

/// History of one diagram's chat. The client is stateless, so every request
/// carries all messages so far; tiles ride on the first user message.
#[derive(Debug, Clone)]
pub struct Conversation {
    id: String,
    tiles: Vec<ImageRef>,
    messages: Vec<Message>,
}

impl Conversation {
    pub fn new(id: &str, tiles: Vec<ImageRef>) -> Self {
        Conversation {
            id: id.to_string(),
            tiles,
            messages: Vec::new(),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn has_tiles(&self) -> bool {
        !self.tiles.is_empty()
    }

    pub fn messages(&self) -> &[Message] {
        &self.messages
    }
}

/// Checks a candidate must pass: every error, plus the comment-notation and
/// self-containedness lints.
pub fn gate_findings(code: &str) -> Vec<Diagnostic> {
    let a = analyze(code);
    a.diagnostics
        .into_iter()
        .filter(|d| d.is_error() || d.code == codes::LINE_COMMENT || d.code == codes::NOT_SELF_CONTAINED)
        .collect()
}

fn distinct_codes(diags: &[Diagnostic]) -> BTreeSet<&str> {
    diags.iter().map(|d| d.code.as_str()).collect()
}

pub fn repair_prompt(code: &str, findings: &[Diagnostic]) -> String {
    let mut text = String::from("The code below fails the following checks:\n");
    for d in findings {
        text.push_str(&format!("- {d}\n"));
    }
    text.push_str("\nFix every listed problem and return the complete corrected code in one fenced code block.\n\n```\n");
    text.push_str(code);
    if !code.ends_with('\n') {
        text.push('\n');
    }
    text.push_str("```");
    text
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepairOutcome {
    pub code: String,
    pub rounds: u32,
    /// Findings left on `code`; empty when the repair converged.
    pub findings: Vec<Diagnostic>,
}

impl RepairOutcome {
    pub fn is_clean(&self) -> bool {
        self.findings.is_empty()
    }
}

pub struct Pipeline<'a> {
    pub client: &'a dyn ChatClient,
    pub clock: &'a dyn Clock,
    pub max_rounds: u32,
}

impl<'a> Pipeline<'a> {
    pub fn new(client: &'a dyn ChatClient, clock: &'a dyn Clock) -> Self {
        Pipeline {
            client,
            clock,
            max_rounds: DEFAULT_MAX_ROUNDS,
        }
    }

    fn exchange(
        &self,
        conv: &mut Conversation,
        prompt: String,
        extra: &[ImageRef],
        transcript: &mut Transcript,
    ) -> Result<String, PipelineError> {
        let mut images = Vec::new();
        if conv.messages.is_empty() {
            images.extend(conv.tiles.iter().cloned());
        }
        images.extend(extra.iter().cloned());
        let names = images.iter().map(|i| i.name.clone()).collect();
        conv.messages.push(Message::user(prompt.clone(), images));
        let sent = send_with_retry(
            self.client,
            &ChatRequest {
                conversation: &conv.id,
                messages: &conv.messages,
            },
        );
        let response = match sent {
            Ok(r) => r,
            Err(e) => {
                conv.messages.pop();
                return Err(e.into());
            }
        };
        transcript.push(Record::Exchange {
            conversation: conv.id.clone(),
            prompt,
            images: names,
            response: response.clone(),
            timestamp_ms: self.clock.now_ms(),
        });
        conv.messages.push(Message::assistant(response.clone()));
        Ok(response)
    }

    /// Ask for the elements on the conversation's tiles. Results are
    /// re-classified by tag letters, then filtered by `filter` when given.
    pub fn detect_elements(
        &self,
        conv: &mut Conversation,
        task: &GenerationTask,
        transcript: &mut Transcript,
    ) -> Result<ElementList, PipelineError> {
        if task.kind != TaskKind::ElementDetection {
            return Err(PipelineError::NotDetection(task.kind));
        }
        if !conv.has_tiles() && task.tiles.is_empty() {
            return Err(PipelineError::NoTiles);
        }
        let extra = load_task_tiles(task, transcript);
        let response = self.exchange(conv, render_prompt(task)?, &extra, transcript)?;
        let parsed = parse_element_lines(&response);
        for w in parsed.warnings {
            transcript.push(Record::Warning { message: w });
        }
        let filter = task.context.get("filter").and_then(|f| ElementKind::parse(f));
        let mut list = ElementList::default();
        for e in parsed.list.elements() {
            let fixed = apply_letter_heuristics(e);
            if fixed.kind != e.kind {
                transcript.push(Record::Warning {
                    message: format!("'{}' reclassified from {} to {} by its letter code", e.tag, e.kind, fixed.kind),
                });
            }
            if filter.is_none_or(|k| k == fixed.kind) {
                list.push(fixed);
            }
        }
        Ok(list)
    }

    /// Render, send and extract the first ST snippet. Responses without code
    /// are re-asked up to the client's attempt limit.
    pub fn generate(
        &self,
        conv: &mut Conversation,
        task: &GenerationTask,
        transcript: &mut Transcript,
    ) -> Result<String, PipelineError> {
        if task.kind == TaskKind::ElementDetection {
            return Err(PipelineError::NotGeneration(task.kind));
        }
        let prompt = render_prompt(task)?;
        let extra = load_task_tiles(task, transcript);
        let attempts = self.client.config().max_attempts.max(1);
        for attempt in 0..attempts {
            let text = if attempt == 0 {
                prompt.clone()
            } else {
                "Your previous answer contained no Structured Text code. Answer the request again with the complete code in one fenced code block.".to_string()
            };
            let response = self.exchange(conv, text, if attempt == 0 { &extra } else { &[] }, transcript)?;
            if let Some(code) = extract_st(&response).into_iter().find(|c| !c.trim().is_empty()) {
                return Ok(code);
            }
            transcript.push(Record::Warning {
                message: "no code in response".to_string(),
            });
        }
        Err(PipelineError::NoCode)
    }

    /// Feed findings back until the candidate is clean or `max_rounds` is
    /// spent. A round whose answer has more distinct codes than the current
    /// candidate is discarded.
    pub fn repair(
        &self,
        conv: &mut Conversation,
        candidate: &str,
        findings: Vec<Diagnostic>,
        transcript: &mut Transcript,
    ) -> Result<RepairOutcome, PipelineError> {
        let mut current = RepairOutcome {
            code: candidate.to_string(),
            rounds: 0,
            findings,
        };
        while !current.is_clean() && current.rounds < self.max_rounds.max(1) {
            current.rounds += 1;
            let sent: Vec<_> = current.findings.iter().map(Diagnostic::record).collect();
            let response = self.exchange(conv, repair_prompt(&current.code, &current.findings), &[], transcript)?;
            let next = extract_st(&response).into_iter().find(|c| !c.trim().is_empty());
            let accepted = match next {
                Some(code) => {
                    let found = gate_findings(&code);
                    let better = distinct_codes(&found).len() <= distinct_codes(&current.findings).len();
                    if better {
                        current.code = code;
                        current.findings = found;
                    }
                    better
                }
                None => false,
            };
            transcript.push(Record::Repair {
                round: current.rounds,
                diagnostics: sent,
                accepted,
            });
        }
        Ok(current)
    }
}

fn load_task_tiles(task: &GenerationTask, transcript: &mut Transcript) -> Vec<ImageRef> {
    let mut out = Vec::new();
    for p in &task.tiles {
        match ImageRef::load(p) {
            Ok(img) => out.push(img),
            Err(e) => transcript.push(Record::Warning {
                message: format!("cannot attach '{}': {e}", p.display()),
            }),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mock::{MockClient, MockScript};
    use crate::transcript::FixedClock;

    const BROKEN: &str = "```\nPROGRAM P\nVAR x : INT; END_VAR\nx := 1\nEND_PROGRAM\n```";
    const FIXED: &str = "```\nPROGRAM P\nVAR x : INT; END_VAR\nx := 1;\nEND_PROGRAM\n```";

    fn tile() -> ImageRef {
        ImageRef {
            name: "t.png".into(),
            media_type: "image/png".into(),
            bytes: vec![0],
        }
    }

    fn run_repair(script: MockScript, code: &str) -> (RepairOutcome, Transcript, usize) {
        let client = MockClient::new(script);
        let clock = FixedClock(7);
        let p = Pipeline::new(&client, &clock);
        let mut conv = Conversation::new("c", vec![tile()]);
        let mut t = Transcript::new();
        let out = p.repair(&mut conv, code, gate_findings(code), &mut t).unwrap();
        (out, t, client.unused().len())
    }

    #[test]
    fn missing_semicolon_is_fixed_in_one_round() {
        let code = &extract_st(BROKEN)[0];
        assert_eq!(distinct_codes(&gate_findings(code)), BTreeSet::from(["P001"]));
        let script = MockScript::new(true).entry(None, &["fails the following checks", "P001"], FIXED);
        let (out, t, unused) = run_repair(script, code);
        assert!(out.is_clean());
        assert_eq!(out.rounds, 1);
        assert_eq!(unused, 0);
        assert!(matches!(t.records().last(), Some(Record::Repair { accepted: true, .. })));
    }

    #[test]
    fn identical_bad_code_fails_after_three_rounds() {
        let code = &extract_st(BROKEN)[0];
        let script = MockScript::new(true)
            .entry(None, &["P001"], BROKEN)
            .entry(None, &["P001"], BROKEN)
            .entry(None, &["P001"], BROKEN);
        let (out, _, unused) = run_repair(script, code);
        assert!(!out.is_clean());
        assert_eq!(out.rounds, 3);
        assert_eq!(unused, 0);
    }

    #[test]
    fn clean_candidate_is_untouched() {
        let code = &extract_st(FIXED)[0];
        let (out, t, _) = run_repair(MockScript::new(true), code);
        assert_eq!(out.rounds, 0);
        assert_eq!(&out.code, code);
        assert!(t.records().is_empty());
    }

    #[test]
    fn worse_answers_are_rejected() {
        let code = &extract_st(BROKEN)[0];
        let worse = "```\nPROGRAM P\nVAR x : INT; END_VAR\ny := TRUE;\nx := 1.5;\nEND_PROGRAM\n```";
        let script = MockScript::new(true).entry(None, &[], worse).entry(None, &[], FIXED);
        let (out, t, _) = run_repair(script, code);
        assert!(out.is_clean());
        assert_eq!(out.rounds, 2);
        let accepted: Vec<bool> = t
            .records()
            .iter()
            .filter_map(|r| match r {
                Record::Repair { accepted, .. } => Some(*accepted),
                _ => None,
            })
            .collect();
        assert_eq!(accepted, vec![false, true]);
    }

    #[test]
    fn prose_only_response_is_no_code() {
        let client = MockClient::new(MockScript::new(true).entry(None, &[], "I am not sure what you mean."));
        let clock = FixedClock(0);
        let p = Pipeline::new(&client, &clock);
        let mut conv = Conversation::new("c", vec![tile()]);
        let mut t = Transcript::new();
        let task = GenerationTask::new(TaskKind::ControlLoop, &["TC-1"]);
        assert_eq!(p.generate(&mut conv, &task, &mut t), Err(PipelineError::NoCode));
        assert_eq!(t.exchanges().count(), 1);
    }

    #[test]
    fn detection_needs_tiles_and_filters_by_letters() {
        let answer = "PICSA 4712.02 | controller | pressure\nHS 4750.01 | controller | level\nPI 4712.01 | controller | pressure\n";
        let client = MockClient::new(MockScript::new(true).entry(None, &["List every"], answer));
        let clock = FixedClock(0);
        let p = Pipeline::new(&client, &clock);
        let task = GenerationTask::new(TaskKind::ElementDetection, &[]).with("filter", "controller");
        let mut t = Transcript::new();
        assert_eq!(
            p.detect_elements(&mut Conversation::new("c", vec![]), &task, &mut t),
            Err(PipelineError::NoTiles)
        );
        let mut conv = Conversation::new("c", vec![tile()]);
        let list = p.detect_elements(&mut conv, &task, &mut t).unwrap();
        assert_eq!(list.tags(), vec!["PICSA 4712.02"]);
        assert_eq!(t.warnings().len(), 2);
        assert_eq!(conv.messages()[0].images.len(), 1);
    }

    #[test]
    fn history_is_resent_and_tiles_attach_once() {
        let script = MockScript::new(true).entry(None, &[], "a").entry(None, &[], FIXED);
        let client = MockClient::new(script);
        let clock = FixedClock(0);
        let p = Pipeline::new(&client, &clock);
        let mut conv = Conversation::new("c", vec![tile()]);
        let mut t = Transcript::new();
        p.detect_elements(&mut conv, &GenerationTask::new(TaskKind::ElementDetection, &[]), &mut t)
            .unwrap();
        p.generate(&mut conv, &GenerationTask::new(TaskKind::Interlock, &["E-7"]), &mut t)
            .unwrap();
        assert_eq!(conv.messages().len(), 4);
        assert!(conv.messages()[2].images.is_empty());
    }
}
