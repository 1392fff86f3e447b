//! Chat-completion backend.
//!
//! Speaks the common `POST <base_url>/v1/chat/completions` protocol. Transport
//! errors, HTTP 429 and 5xx responses are retried with exponential backoff.

use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{count_tokens, extract_answer, render_prompt, Agent, AgentError, AgentMessage, TokenCost, Turn, SYSTEM_PROMPT};
use crate::rng::Stream;

pub const API_KEY_ENV: &str = "SWARM_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RemoteConfig {
    pub base_url: String,
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
    /// Bearer token; read from `SWARM_API_KEY` when unset.
    #[serde(skip_serializing)]
    pub api_key: Option<String>,
    pub max_attempts: usize,
    pub backoff_ms: u64,
    pub timeout_secs: u64,
    /// Upper bound on concurrent requests.
    pub max_in_flight: usize,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        RemoteConfig {
            base_url: "https://api.openai.com".into(),
            model: "gpt-4o-mini".into(),
            temperature: 0.7,
            max_tokens: 512,
            api_key: None,
            max_attempts: 3,
            backoff_ms: 500,
            timeout_secs: 60,
            max_in_flight: 4,
        }
    }
}

#[derive(Debug, Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Debug, Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: Vec<ChatMessage<'a>>,
    temperature: f64,
    max_tokens: u32,
}

#[derive(Debug, Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
    #[serde(default)]
    usage: Option<Usage>,
}

#[derive(Debug, Deserialize)]
struct Choice {
    message: ResponseMessage,
}

#[derive(Debug, Deserialize)]
struct ResponseMessage {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Debug, Deserialize)]
struct Usage {
    prompt_tokens: u64,
    completion_tokens: u64,
}

pub struct RemoteAgent {
    config: RemoteConfig,
    api_key: Option<String>,
    http: ureq::Agent,
}

impl RemoteAgent {
    pub fn new(config: RemoteConfig) -> Self {
        let api_key = config.api_key.clone().or_else(|| std::env::var(API_KEY_ENV).ok());
        let http = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .build()
            .new_agent();
        RemoteAgent { config, api_key, http }
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.config
    }

    fn endpoint(&self) -> String {
        format!("{}/v1/chat/completions", self.config.base_url.trim_end_matches('/'))
    }

    /// Sends one request, retrying transient failures. Returns the message
    /// content and the reported usage, if any.
    fn complete(&self, prompt: &str) -> Result<(String, Option<Usage>), AgentError> {
        let body = ChatRequest {
            model: &self.config.model,
            messages: vec![
                ChatMessage { role: "system", content: SYSTEM_PROMPT },
                ChatMessage { role: "user", content: prompt },
            ],
            temperature: self.config.temperature,
            max_tokens: self.config.max_tokens,
        };
        let attempts = self.config.max_attempts.max(1);
        let mut last_error = String::new();
        for attempt in 1..=attempts {
            let mut request = self.http.post(self.endpoint());
            if let Some(key) = &self.api_key {
                request = request.header("Authorization", format!("Bearer {key}"));
            }
            match request.send_json(&body) {
                Ok(mut response) => {
                    let parsed: ChatResponse = response
                        .body_mut()
                        .read_json()
                        .map_err(|e| AgentError::InvalidResponse(e.to_string()))?;
                    let content = parsed
                        .choices
                        .into_iter()
                        .next()
                        .ok_or_else(|| AgentError::InvalidResponse("no choices".into()))?
                        .message
                        .content
                        .unwrap_or_default();
                    return Ok((content, parsed.usage));
                }
                Err(ureq::Error::StatusCode(code)) if code != 429 && code < 500 => {
                    return Err(AgentError::Http { attempts: attempt, reason: format!("http status {code}") });
                }
                Err(e) => last_error = e.to_string(),
            }
            if attempt < attempts {
                thread::sleep(Duration::from_millis(self.config.backoff_ms << (attempt - 1)));
            }
        }
        Err(AgentError::Http { attempts, reason: last_error })
    }
}

impl Agent for RemoteAgent {
    /// An unparsable reply is not an error: the message comes back with
    /// `answer: None` and abstains from voting.
    fn respond(&self, turn: &Turn<'_>, _rng: &mut Stream) -> Result<AgentMessage, AgentError> {
        let prompt = render_prompt(turn);
        let (content, usage) = self.complete(&prompt)?;
        let token_cost = match usage {
            Some(u) => TokenCost::new(u.prompt_tokens, u.completion_tokens),
            None => TokenCost::new(count_tokens(SYSTEM_PROMPT) + count_tokens(&prompt), count_tokens(&content)),
        };
        Ok(AgentMessage {
            round: turn.round,
            sender: turn.agent,
            answer: extract_answer(&content, turn.item),
            rationale: content.trim().to_string(),
            token_cost,
        })
    }
}
