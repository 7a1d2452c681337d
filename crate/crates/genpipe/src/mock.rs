//! Scripted replay client.
//!
//! Script files are TOML:
//!
//! ```toml
//! strict = true
//!
//! [[exchange]]
//! conversation = "eastman"        # optional; omitted = any conversation
//! expect = ["List every", "controller"]
//! response = '''
//! FC-1 | controller | flow
//! '''
//! ```
//!
//! A request matches an entry when its final user message contains every
//! `expect` string. Each entry answers at most once. Entries are consumed
//! per conversation: in strict mode a request must match the next unused
//! entry of its conversation, otherwise the first unused matching entry is
//! taken.

use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::client::{ChatClient, ChatRequest, ClientConfig, ClientError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conversation: Option<String>,
    #[serde(default)]
    pub expect: Vec<String>,
    pub response: String,
}

impl MockEntry {
    pub fn matches(&self, conversation: &str, prompt: &str) -> bool {
        self.conversation.as_deref().is_none_or(|c| c == conversation) && self.missing(prompt).is_none()
    }

    fn missing<'a>(&'a self, prompt: &str) -> Option<&'a str> {
        self.expect.iter().find(|e| !prompt.contains(e.as_str())).map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockScript {
    #[serde(default = "default_strict")]
    pub strict: bool,
    #[serde(default, rename = "exchange")]
    pub entries: Vec<MockEntry>,
}

fn default_strict() -> bool {
    true
}

impl MockScript {
    pub fn new(strict: bool) -> Self {
        MockScript {
            strict,
            entries: Vec::new(),
        }
    }

    pub fn entry(mut self, conversation: Option<&str>, expect: &[&str], response: &str) -> Self {
        self.entries.push(MockEntry {
            conversation: conversation.map(str::to_string),
            expect: expect.iter().map(|s| s.to_string()).collect(),
            response: response.to_string(),
        });
        self
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("mock script serializes")
    }
}

pub struct MockClient {
    script: MockScript,
    config: ClientConfig,
    used: Mutex<Vec<bool>>,
    log: Mutex<Vec<(String, usize)>>,
}

impl MockClient {
    pub fn new(script: MockScript) -> Self {
        let n = script.entries.len();
        MockClient {
            script,
            config: ClientConfig {
                max_attempts: 1,
                ..ClientConfig::default()
            },
            used: Mutex::new(vec![false; n]),
            log: Mutex::new(Vec::new()),
        }
    }

    /// Entries never consumed, by index.
    pub fn unused(&self) -> Vec<usize> {
        let used = self.used.lock().expect("mock state");
        (0..used.len()).filter(|&i| !used[i]).collect()
    }

    /// `(conversation, entry index)` for every answered request, in call order.
    pub fn calls(&self) -> Vec<(String, usize)> {
        self.log.lock().expect("mock log").clone()
    }
}

impl ChatClient for MockClient {
    fn config(&self) -> &ClientConfig {
        &self.config
    }

    fn send(&self, request: &ChatRequest<'_>) -> Result<String, ClientError> {
        let prompt = request.prompt();
        let conv = request.conversation;
        let mut used = self.used.lock().expect("mock state");
        let candidates = self
            .script
            .entries
            .iter()
            .enumerate()
            .filter(|(i, e)| !used[*i] && e.conversation.as_deref().is_none_or(|c| c == conv));
        let chosen = if self.script.strict {
            let Some((i, entry)) = candidates.into_iter().next() else {
                return Err(ClientError::Mismatch(format!(
                    "script exhausted for conversation '{conv}'"
                )));
            };
            if let Some(missing) = entry.missing(prompt) {
                return Err(ClientError::Mismatch(format!(
                    "conversation '{conv}': request does not match entry {} (missing {missing:?})",
                    i + 1
                )));
            }
            i
        } else {
            let mut candidates = candidates;
            match candidates.find(|(_, e)| e.missing(prompt).is_none()) {
                Some((i, _)) => i,
                None => {
                    return Err(ClientError::Mismatch(format!(
                        "conversation '{conv}': no unused entry matches the request"
                    )))
                }
            }
        };
        used[chosen] = true;
        self.log.lock().expect("mock log").push((conv.to_string(), chosen));
        Ok(self.script.entries[chosen].response.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::client::Message;

    fn ask(client: &MockClient, conv: &str, text: &str) -> Result<String, ClientError> {
        let msgs = [Message::user(text, vec![])];
        client.send(&ChatRequest {
            conversation: conv,
            messages: &msgs,
        })
    }

    #[test]
    fn strict_order_is_enforced() {
        let script = MockScript::new(true).entry(None, &["one"], "1").entry(None, &["two"], "2");
        let c = MockClient::new(script.clone());
        assert!(matches!(ask(&c, "x", "two"), Err(ClientError::Mismatch(_))));
        let c = MockClient::new(script);
        assert_eq!(ask(&c, "x", "say one").unwrap(), "1");
        assert_eq!(ask(&c, "x", "say two").unwrap(), "2");
        assert!(matches!(ask(&c, "x", "three"), Err(ClientError::Mismatch(m)) if m.contains("exhausted")));
        assert!(c.unused().is_empty());
    }

    #[test]
    fn lenient_mode_picks_first_match() {
        let script = MockScript::new(false).entry(None, &["one"], "1").entry(None, &["two"], "2");
        let c = MockClient::new(script);
        assert_eq!(ask(&c, "x", "two").unwrap(), "2");
        assert_eq!(ask(&c, "x", "one").unwrap(), "1");
        assert_eq!(c.calls(), vec![("x".to_string(), 1), ("x".to_string(), 0)]);
    }

    #[test]
    fn conversations_have_independent_queues() {
        let script = MockScript::new(true)
            .entry(Some("a"), &["x"], "a1")
            .entry(Some("b"), &["y"], "b1")
            .entry(Some("a"), &["z"], "a2");
        let c = MockClient::new(script);
        assert_eq!(ask(&c, "b", "y").unwrap(), "b1");
        assert_eq!(ask(&c, "a", "x").unwrap(), "a1");
        assert_eq!(ask(&c, "a", "z").unwrap(), "a2");
    }

    #[test]
    fn toml_round_trip() {
        let script = MockScript::new(true).entry(Some("c"), &["a", "b"], "line1\nline2 '''\n");
        let text = script.to_toml();
        assert_eq!(MockScript::parse(&text).unwrap(), script);
        let parsed = MockScript::parse("[[exchange]]\nresponse = 'hi'\n").unwrap();
        assert!(parsed.strict);
        assert!(parsed.entries[0].expect.is_empty());
    }
}
