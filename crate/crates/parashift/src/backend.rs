//! LLM access: a backend trait, a deterministic scripted backend for replay,
//! and a blocking HTTP client for chat-completion endpoints.

use std::collections::VecDeque;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::domain::LlmProfile;

/// Default token estimator: `ceil(bytes / 4)`. Monotone under concatenation
/// because byte length is additive.
pub fn estimate_tokens(text: &str) -> usize {
    text.len().div_ceil(4)
}

/// Pluggable token estimation for profiles whose providers count differently.
pub trait TokenEstimator: Send + Sync {
    fn estimate(&self, text: &str) -> usize;
}

/// The `ceil(bytes / 4)` rule as a [`TokenEstimator`].
#[derive(Debug, Clone, Copy, Default)]
pub struct ByteEstimator;

impl TokenEstimator for ByteEstimator {
    fn estimate(&self, text: &str) -> usize {
        estimate_tokens(text)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system_prompt: Option<String>,
    pub user_messages: Vec<String>,
    pub model_id: String,
    pub temperature: f64,
    pub max_tokens: usize,
}

impl ChatRequest {
    pub fn new(
        system_prompt: Option<String>,
        user_message: impl Into<String>,
        profile: &LlmProfile,
    ) -> Self {
        ChatRequest {
            system_prompt,
            user_messages: vec![user_message.into()],
            model_id: profile.model_id.clone(),
            temperature: profile.temperature,
            max_tokens: profile.max_response_tokens,
        }
    }

    /// All prompt text that counts against the context window.
    pub fn all_text(&self) -> String {
        let mut text = String::new();
        if let Some(sys) = &self.system_prompt {
            text.push_str(sys);
        }
        for msg in &self.user_messages {
            text.push_str(msg);
        }
        text
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub text: String,
    pub prompt_tokens: usize,
    pub completion_tokens: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum BackendError {
    #[error(
        "request would overflow the context window: {estimated} prompt tokens + {max_tokens} \
         response tokens > {context_length}"
    )]
    ContextOverflow {
        estimated: usize,
        max_tokens: usize,
        context_length: usize,
    },
    #[error("chat request must contain at least one user message")]
    EmptyRequest,
    #[error("negative temperature {0} is not valid")]
    InvalidTemperature(f64),
    #[error("scripted backend exhausted after {consumed} replies")]
    ScriptExhausted { consumed: usize },
    #[error("transport failure after {attempts} attempts: {message}")]
    Transport { attempts: usize, message: String },
    #[error("HTTP {status}: {body}")]
    HttpStatus { status: u16, body: String },
    #[error("malformed response from endpoint: {0}")]
    MalformedResponse(String),
}

/// Anything that can answer a [`ChatRequest`]. Implementations must be safe
/// to share across bench workers.
pub trait ChatBackend: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, BackendError>;
    /// True when no network I/O can ever happen through this backend.
    fn is_offline(&self) -> bool {
        false
    }
}

/// Deterministic replay backend: hands out a fixed list of replies in order.
/// Requesting past the end is an error, never a silent repeat.
pub struct ScriptedBackend {
    inner: Mutex<ScriptState>,
}

struct ScriptState {
    queue: VecDeque<String>,
    consumed: usize,
}

impl ScriptedBackend {
    pub fn new(replies: impl IntoIterator<Item = impl Into<String>>) -> Self {
        ScriptedBackend {
            inner: Mutex::new(ScriptState {
                queue: replies.into_iter().map(Into::into).collect(),
                consumed: 0,
            }),
        }
    }

    /// Replies handed out so far.
    pub fn consumed(&self) -> usize {
        self.inner.lock().unwrap().consumed
    }

    /// Replies still queued.
    pub fn remaining(&self) -> usize {
        self.inner.lock().unwrap().queue.len()
    }
}

impl ChatBackend for ScriptedBackend {
    fn complete(&self, _request: &ChatRequest) -> Result<ChatResponse, BackendError> {
        let mut state = self.inner.lock().unwrap();
        match state.queue.pop_front() {
            Some(text) => {
                state.consumed += 1;
                let completion_tokens = estimate_tokens(&text);
                Ok(ChatResponse {
                    text,
                    prompt_tokens: 0,
                    completion_tokens,
                })
            }
            None => Err(BackendError::ScriptExhausted {
                consumed: state.consumed,
            }),
        }
    }

    fn is_offline(&self) -> bool {
        true
    }
}

/// Retry policy for transient transport failures. HTTP 4xx is never retried.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_retries: usize,
    pub backoff_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 2,
            backoff_ms: 250,
        }
    }
}

/// Blocking client for OpenAI-style chat-completion endpoints
/// (`POST {base_url}` with `model`/`messages`/`temperature`/`max_tokens`).
/// The API key is read from the named environment variable at request time
/// and is never stored or logged.
pub struct HttpBackend {
    base_url: String,
    api_key_env: Option<String>,
    retry: RetryPolicy,
    client: reqwest::blocking::Client,
}

impl HttpBackend {
    pub fn new(
        base_url: impl Into<String>,
        api_key_env: Option<String>,
        retry: RetryPolicy,
    ) -> Self {
        HttpBackend {
            base_url: base_url.into(),
            api_key_env,
            retry,
            client: reqwest::blocking::Client::builder()
                .timeout(Duration::from_secs(600))
                .build()
                .expect("default TLS backend"),
        }
    }

    fn send_once(&self, request: &ChatRequest) -> Result<ChatResponse, BackendError> {
        #[derive(Serialize)]
        struct WireMessage<'a> {
            role: &'static str,
            content: &'a str,
        }
        #[derive(Serialize)]
        struct WireRequest<'a> {
            model: &'a str,
            messages: Vec<WireMessage<'a>>,
            temperature: f64,
            max_tokens: usize,
        }
        #[derive(Deserialize)]
        struct WireChoice {
            message: WireChoiceMessage,
        }
        #[derive(Deserialize)]
        struct WireChoiceMessage {
            content: String,
        }
        #[derive(Deserialize, Default)]
        struct WireUsage {
            #[serde(default)]
            prompt_tokens: usize,
            #[serde(default)]
            completion_tokens: usize,
        }
        #[derive(Deserialize)]
        struct WireResponse {
            choices: Vec<WireChoice>,
            #[serde(default)]
            usage: Option<WireUsage>,
        }

        let mut messages = Vec::new();
        if let Some(sys) = &request.system_prompt {
            messages.push(WireMessage {
                role: "system",
                content: sys,
            });
        }
        for msg in &request.user_messages {
            messages.push(WireMessage {
                role: "user",
                content: msg,
            });
        }
        let body = WireRequest {
            model: &request.model_id,
            messages,
            temperature: request.temperature,
            max_tokens: request.max_tokens,
        };

        let mut http = self.client.post(&self.base_url).json(&body);
        if let Some(env_name) = &self.api_key_env {
            if let Ok(key) = std::env::var(env_name) {
                http = http.bearer_auth(key);
            }
        }
        let response = http.send().map_err(|e| BackendError::Transport {
            attempts: 1,
            message: e.to_string(),
        })?;
        let status = response.status();
        if !status.is_success() {
            let body = response.text().unwrap_or_default();
            return Err(BackendError::HttpStatus {
                status: status.as_u16(),
                body,
            });
        }
        let wire: WireResponse = response
            .json()
            .map_err(|e| BackendError::MalformedResponse(e.to_string()))?;
        let choice = wire
            .choices
            .into_iter()
            .next()
            .ok_or_else(|| BackendError::MalformedResponse("empty choices".to_string()))?;
        let usage = wire.usage.unwrap_or_default();
        Ok(ChatResponse {
            text: choice.message.content,
            prompt_tokens: usage.prompt_tokens,
            completion_tokens: usage.completion_tokens,
        })
    }
}

impl ChatBackend for HttpBackend {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, BackendError> {
        let mut attempt = 0;
        loop {
            attempt += 1;
            match self.send_once(request) {
                Ok(response) => return Ok(response),
                // Client errors are deterministic; retrying cannot help.
                Err(BackendError::HttpStatus { status, body }) if (400..500).contains(&status) => {
                    return Err(BackendError::HttpStatus { status, body });
                }
                Err(BackendError::Transport { message, .. })
                | Err(BackendError::HttpStatus { body: message, .. })
                    if attempt <= self.retry.max_retries =>
                {
                    let _ = message;
                    std::thread::sleep(Duration::from_millis(
                        self.retry
                            .backoff_ms
                            .saturating_mul(1 << (attempt - 1).min(6)),
                    ));
                }
                Err(BackendError::Transport { message, .. }) => {
                    return Err(BackendError::Transport {
                        attempts: attempt,
                        message,
                    });
                }
                Err(other) => return Err(other),
            }
        }
    }
}

/// A backend bound to its profile. Enforces the context-window guard before
/// any call reaches the backend.
pub struct Client<'a> {
    pub backend: &'a dyn ChatBackend,
    pub profile: &'a LlmProfile,
    pub estimator: &'a dyn TokenEstimator,
}

impl<'a> Client<'a> {
    pub fn new(backend: &'a dyn ChatBackend, profile: &'a LlmProfile) -> Self {
        Client {
            backend,
            profile,
            estimator: &ByteEstimator,
        }
    }

    pub fn with_estimator(
        backend: &'a dyn ChatBackend,
        profile: &'a LlmProfile,
        estimator: &'a dyn TokenEstimator,
    ) -> Self {
        Client {
            backend,
            profile,
            estimator,
        }
    }

    /// Estimated prompt tokens plus the response budget must fit the context
    /// window; violations are raised before the backend sees the request.
    pub fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, BackendError> {
        if request.user_messages.is_empty() || request.user_messages.iter().all(|m| m.is_empty()) {
            return Err(BackendError::EmptyRequest);
        }
        if request.temperature < 0.0 {
            return Err(BackendError::InvalidTemperature(request.temperature));
        }
        let estimated = self.estimator.estimate(&request.all_text());
        if estimated + request.max_tokens > self.profile.context_length {
            return Err(BackendError::ContextOverflow {
                estimated,
                max_tokens: request.max_tokens,
                context_length: self.profile.context_length,
            });
        }
        self.backend.complete(request)
    }
}
