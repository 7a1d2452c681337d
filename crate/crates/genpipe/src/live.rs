//! Chat-completions style HTTP client with base-64 image parts.

use base64::engine::general_purpose::STANDARD;
use base64::Engine as _;
use serde_json::{json, Value};

use crate::client::{ChatClient, ChatRequest, ClientConfig, ClientError, Message, Role};

pub const API_KEY_VAR: &str = "STGEN_API_KEY";

pub struct LiveClient {
    endpoint: String,
    api_key: String,
    config: ClientConfig,
    agent: ureq::Agent,
}

impl LiveClient {
    /// Reads the key from [`API_KEY_VAR`].
    pub fn from_env(endpoint: &str, config: ClientConfig) -> Result<Self, ClientError> {
        let api_key = std::env::var(API_KEY_VAR)
            .map_err(|_| ClientError::Config(format!("environment variable {API_KEY_VAR} is not set")))?;
        Self::new(endpoint, &api_key, config)
    }

    pub fn new(endpoint: &str, api_key: &str, config: ClientConfig) -> Result<Self, ClientError> {
        if endpoint.is_empty() || config.model.is_empty() {
            return Err(ClientError::Config("live mode needs an endpoint and a model".into()));
        }
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .build()
            .into();
        Ok(LiveClient {
            endpoint: endpoint.to_string(),
            api_key: api_key.to_string(),
            config,
            agent,
        })
    }
}

fn role_name(role: Role) -> &'static str {
    match role {
        Role::System => "system",
        Role::User => "user",
        Role::Assistant => "assistant",
    }
}

fn message_json(m: &Message) -> Value {
    if m.images.is_empty() {
        return json!({ "role": role_name(m.role), "content": m.text });
    }
    let mut parts = vec![json!({ "type": "text", "text": m.text })];
    for img in &m.images {
        let url = format!("data:{};base64,{}", img.media_type, STANDARD.encode(&img.bytes));
        parts.push(json!({ "type": "image_url", "image_url": { "url": url } }));
    }
    json!({ "role": role_name(m.role), "content": parts })
}

/// Request body for one call; sampling parameters are merged at top level.
pub fn request_body(config: &ClientConfig, messages: &[Message]) -> Value {
    let mut body = json!({
        "model": config.model,
        "messages": messages.iter().map(message_json).collect::<Vec<_>>(),
    });
    for (k, v) in &config.sampling {
        body[k] = json!(v);
    }
    body
}

pub fn response_text(v: &Value) -> Option<String> {
    v.pointer("/choices/0/message/content")?.as_str().map(str::to_string)
}

impl ChatClient for LiveClient {
    fn config(&self) -> &ClientConfig {
        &self.config
    }

    fn send(&self, request: &ChatRequest<'_>) -> Result<String, ClientError> {
        let body = request_body(&self.config, request.messages);
        let mut resp = self
            .agent
            .post(&self.endpoint)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(&body)
            .map_err(|e| match e {
                ureq::Error::StatusCode(code) if code == 429 || code >= 500 => {
                    ClientError::Transport(format!("HTTP {code}"))
                }
                ureq::Error::StatusCode(code) => ClientError::Config(format!("HTTP {code}")),
                other => ClientError::Transport(other.to_string()),
            })?;
        let v: Value = resp
            .body_mut()
            .read_json()
            .map_err(|e| ClientError::Transport(e.to_string()))?;
        response_text(&v).ok_or_else(|| ClientError::Transport("response has no message content".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::client::ImageRef;

    #[test]
    fn body_carries_images_as_data_urls() {
        let mut config = ClientConfig {
            model: "vision-1".into(),
            ..ClientConfig::default()
        };
        config.sampling.insert("temperature".into(), 0.0);
        let msgs = [Message::user(
            "describe",
            vec![ImageRef {
                name: "a.png".into(),
                media_type: "image/png".into(),
                bytes: vec![1, 2, 3],
            }],
        )];
        let body = request_body(&config, &msgs);
        assert_eq!(body["model"], "vision-1");
        assert_eq!(body["temperature"], 0.0);
        assert_eq!(body["messages"][0]["content"][1]["image_url"]["url"], "data:image/png;base64,AQID");
        assert_eq!(body["messages"][0]["content"][0]["text"], "describe");
    }

    #[test]
    fn text_only_messages_stay_plain() {
        let body = request_body(&ClientConfig::default(), &[Message::assistant("x")]);
        assert_eq!(body["messages"][0], json!({"role": "assistant", "content": "x"}));
        let reply = json!({"choices": [{"message": {"content": "hello"}}]});
        assert_eq!(response_text(&reply).as_deref(), Some("hello"));
        assert_eq!(response_text(&json!({})), None);
    }

    #[test]
    fn missing_model_is_a_config_error() {
        let config = ClientConfig {
            model: String::new(),
            ..ClientConfig::default()
        };
        assert!(matches!(LiveClient::new("http://localhost", "k", config), Err(ClientError::Config(_))));
    }
}
