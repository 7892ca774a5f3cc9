//! Blocking client for the chat-completions wire protocol.
//!
//! Transport failures and 5xx statuses are retried up to three times with
//! exponential backoff; 4xx statuses fail immediately. One request times
//! out after 60 seconds.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::parse::{parse_ambiguity_reply, AmbiguityVerdict};
use crate::templates::{render_template, template, TemplateName};
use crate::LlmError;

pub const ENV_BASE_URL: &str = "CURE_LLM_BASE_URL";
pub const ENV_API_KEY: &str = "CURE_LLM_API_KEY";
pub const ENV_MODEL: &str = "CURE_LLM_MODEL";

/// Machine-readable answer footer appended to the ambiguity prompt so the
/// free-text reply carries a deterministic verdict.
pub const ANSWER_FOOTER: &str = "\n\nAfter your reasoning, end your reply with exactly two lines:\nITEMS: <comma-separated items you chose>\nLOCATIONS: <comma-separated target locations you chose>\n";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenLogprob {
    pub token: String,
    pub logprob: f64,
    #[serde(default)]
    pub top_logprobs: Vec<TopLogprob>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopLogprob {
    pub token: String,
    pub logprob: f64,
}

/// One request/response exchange. [`ChatClient::chat`] fills the response
/// fields in.
#[derive(Debug, Clone, PartialEq)]
pub struct ChatExchange {
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    /// When set, request per-token log-probabilities with this many
    /// alternatives per position.
    pub top_logprobs: Option<u32>,
    pub response_text: Option<String>,
    pub token_logprobs: Option<Vec<TokenLogprob>>,
    /// Raw response body as received.
    pub raw_response: Option<String>,
}

impl ChatExchange {
    pub fn new(messages: Vec<ChatMessage>, temperature: f64) -> Self {
        Self {
            messages,
            temperature,
            top_logprobs: None,
            response_text: None,
            token_logprobs: None,
            raw_response: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ClientConfig {
    pub base_url: String,
    pub api_key: Option<String>,
    pub model: String,
    pub temperature: f64,
    pub timeout: Duration,
    pub max_retries: u32,
    /// First retry delay; doubles per attempt (1s, 2s, 4s by default).
    pub backoff_base: Duration,
}

impl ClientConfig {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            api_key: None,
            model: model.into(),
            temperature: 0.0,
            timeout: Duration::from_secs(60),
            max_retries: 3,
            backoff_base: Duration::from_secs(1),
        }
    }

    /// Reads `CURE_LLM_BASE_URL`, `CURE_LLM_API_KEY` (optional), and
    /// `CURE_LLM_MODEL`.
    pub fn from_env() -> Result<Self, LlmError> {
        let base_url = std::env::var(ENV_BASE_URL).map_err(|_| LlmError::MissingEnv(ENV_BASE_URL))?;
        let model = std::env::var(ENV_MODEL).map_err(|_| LlmError::MissingEnv(ENV_MODEL))?;
        let mut cfg = Self::new(base_url, model);
        cfg.api_key = std::env::var(ENV_API_KEY).ok();
        Ok(cfg)
    }
}

#[derive(Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    messages: &'a [ChatMessage],
    temperature: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    logprobs: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    top_logprobs: Option<u32>,
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireMessage,
    #[serde(default)]
    logprobs: Option<WireLogprobs>,
}

#[derive(Deserialize)]
struct WireMessage {
    content: String,
}

#[derive(Deserialize)]
struct WireLogprobs {
    #[serde(default)]
    content: Vec<TokenLogprob>,
}

pub struct ChatClient {
    cfg: ClientConfig,
    http: reqwest::blocking::Client,
}

impl ChatClient {
    pub fn new(cfg: ClientConfig) -> Result<Self, LlmError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(cfg.timeout)
            .build()
            .map_err(|e| LlmError::Transport(e.to_string()))?;
        Ok(Self { cfg, http })
    }

    pub fn config(&self) -> &ClientConfig {
        &self.cfg
    }

    fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.cfg.base_url.trim_end_matches('/'))
    }

    /// Sends the exchange and returns it completed with the response text
    /// and any token log-probabilities.
    pub fn chat(&self, mut exchange: ChatExchange) -> Result<ChatExchange, LlmError> {
        let body = WireRequest {
            model: &self.cfg.model,
            messages: &exchange.messages,
            temperature: exchange.temperature,
            logprobs: exchange.top_logprobs.map(|_| true),
            top_logprobs: exchange.top_logprobs,
        };
        let url = self.endpoint();
        let mut last_error = String::new();
        for attempt in 0..=self.cfg.max_retries {
            if attempt > 0 {
                std::thread::sleep(self.cfg.backoff_base * 2u32.pow(attempt - 1));
            }
            let mut request = self.http.post(&url).json(&body);
            if let Some(key) = &self.cfg.api_key {
                request = request.bearer_auth(key);
            }
            let response = match request.send() {
                Ok(r) => r,
                Err(e) => {
                    last_error = format!("transport: {e}");
                    continue;
                }
            };
            let status = response.status();
            let text = response
                .text()
                .map_err(|e| LlmError::Transport(e.to_string()))?;
            if status.is_success() {
                let wire: WireResponse = serde_json::from_str(&text)
                    .map_err(|e| LlmError::BadResponse(format!("{e}; body: {text}")))?;
                let choice = wire
                    .choices
                    .into_iter()
                    .next()
                    .ok_or_else(|| LlmError::BadResponse("response has no choices".into()))?;
                exchange.response_text = Some(choice.message.content);
                exchange.token_logprobs = choice.logprobs.map(|l| l.content);
                exchange.raw_response = Some(text);
                return Ok(exchange);
            }
            if status.is_client_error() {
                let code = status.as_u16();
                if code == 401 || code == 403 {
                    return Err(LlmError::Credential { status: code });
                }
                return Err(LlmError::Http {
                    status: code,
                    body: text,
                });
            }
            last_error = format!("http {status}");
        }
        Err(LlmError::RetriesExhausted {
            attempts: self.cfg.max_retries + 1,
            last: last_error,
        })
    }

    /// Renders the ambiguity prompt (plus the answer footer), queries the
    /// model, and parses the reply into a verdict.
    pub fn query_ambiguity(
        &self,
        scene: &[String],
        task: &str,
    ) -> Result<AmbiguityVerdict, LlmError> {
        let prompt = ambiguity_prompt(scene, task)?;
        let exchange = self.chat(ChatExchange::new(
            vec![ChatMessage::user(prompt)],
            self.cfg.temperature,
        ))?;
        let reply = exchange
            .response_text
            .as_deref()
            .ok_or_else(|| LlmError::BadResponse("empty completion".into()))?;
        parse_ambiguity_reply(reply, scene)
    }
}

/// The exact prompt `query_ambiguity` sends: rendered template + footer.
pub fn ambiguity_prompt(scene: &[String], task: &str) -> Result<String, LlmError> {
    let rendered = render_template(&template(TemplateName::Ambiguity), scene, task)?;
    Ok(format!("{rendered}{ANSWER_FOOTER}"))
}
