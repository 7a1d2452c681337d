//! Staged generation of Structured Text from process diagrams.
//!
//! A [`batch::Plan`] groups tasks by diagram. Each group shares one
//! [`pipeline::Conversation`]: element detection runs first, then each code
//! task is prompted, its code extracted, checked and, when needed, repaired
//! by feeding the diagnostics back. Every exchange lands in a
//! [`transcript::Transcript`], which can be replayed through a strict
//! [`mock::MockClient`].

pub mod batch;
pub mod client;
pub mod elements;
pub mod extract;
pub mod live;
pub mod mock;
pub mod pipeline;
pub mod task;
pub mod transcript;

pub use batch::{run_batch, BatchError, BatchOptions, GenerationReport, Plan, TaskReport, TileGroup};
pub use client::{send_with_retry, ChatClient, ChatRequest, ClientConfig, ClientError, ImageRef, Message, Role};
pub use elements::{Element, ElementKind, ElementList, Quantity};
pub use extract::extract_st;
pub use live::{LiveClient, API_KEY_VAR};
pub use mock::{MockClient, MockEntry, MockScript};
pub use pipeline::{gate_findings, Conversation, Pipeline, PipelineError, RepairOutcome, DEFAULT_MAX_ROUNDS};
pub use task::{render_prompt, GenerationTask, PromptError, TaskKind};
pub use transcript::{replay_script, Clock, FixedClock, Record, Status, SystemClock, Transcript};
