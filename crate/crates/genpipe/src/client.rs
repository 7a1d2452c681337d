use std::collections::BTreeMap;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

/// An image attached to a message. Only the name is ever recorded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageRef {
    pub name: String,
    pub media_type: String,
    pub bytes: Vec<u8>,
}

impl ImageRef {
    pub fn load(path: &Path) -> std::io::Result<Self> {
        let bytes = std::fs::read(path)?;
        let ext = path
            .extension()
            .map(|e| e.to_string_lossy().to_ascii_lowercase())
            .unwrap_or_default();
        let media_type = match ext.as_str() {
            "jpg" | "jpeg" => "image/jpeg",
            "tif" | "tiff" => "image/tiff",
            _ => "image/png",
        };
        Ok(ImageRef {
            name: path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default(),
            media_type: media_type.to_string(),
            bytes,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub role: Role,
    pub text: String,
    pub images: Vec<ImageRef>,
}

impl Message {
    pub fn user(text: impl Into<String>, images: Vec<ImageRef>) -> Self {
        Message {
            role: Role::User,
            text: text.into(),
            images,
        }
    }

    pub fn assistant(text: impl Into<String>) -> Self {
        Message {
            role: Role::Assistant,
            text: text.into(),
            images: Vec::new(),
        }
    }

    pub fn system(text: impl Into<String>) -> Self {
        Message {
            role: Role::System,
            text: text.into(),
            images: Vec::new(),
        }
    }
}

/// One stateless call. The whole conversation so far is sent every time;
/// `conversation` only identifies it.
#[derive(Debug, Clone)]
pub struct ChatRequest<'a> {
    pub conversation: &'a str,
    pub messages: &'a [Message],
}

impl ChatRequest<'_> {
    /// Text of the final user message.
    pub fn prompt(&self) -> &str {
        self.messages
            .iter()
            .rev()
            .find(|m| m.role == Role::User)
            .map(|m| m.text.as_str())
            .unwrap_or("")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClientConfig {
    pub model: String,
    pub timeout: Duration,
    pub max_attempts: u32,
    /// Sampling parameters sent with each request, recorded in transcripts.
    pub sampling: BTreeMap<String, f64>,
}

impl Default for ClientConfig {
    fn default() -> Self {
        ClientConfig {
            model: "mock".to_string(),
            timeout: Duration::from_secs(120),
            max_attempts: 3,
            sampling: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClientError {
    /// Network or service failure; worth another attempt.
    #[error("transport error: {0}")]
    Transport(String),
    /// A replay script rejected the request.
    #[error("mock mismatch: {0}")]
    Mismatch(String),
    #[error("client misconfigured: {0}")]
    Config(String),
    #[error("gave up after {attempts} attempts: {last}")]
    Exhausted { attempts: u32, last: String },
}

pub trait ChatClient: Send + Sync {
    fn config(&self) -> &ClientConfig;

    fn send(&self, request: &ChatRequest<'_>) -> Result<String, ClientError>;
}

/// `send` with up to `max_attempts` tries on transport failures.
pub fn send_with_retry(client: &dyn ChatClient, request: &ChatRequest<'_>) -> Result<String, ClientError> {
    let attempts = client.config().max_attempts.max(1);
    let mut last = String::new();
    for _ in 0..attempts {
        match client.send(request) {
            Ok(text) => return Ok(text),
            Err(ClientError::Transport(e)) => last = e,
            Err(other) => return Err(other),
        }
    }
    Err(ClientError::Exhausted { attempts, last })
}
