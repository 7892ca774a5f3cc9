//! Adapter for an OpenAI-compatible chat-completion service: the shipped
//! prompt templates, the deterministic response parsers, and a blocking
//! HTTP client with retry.
//!
//! Every parser is a pure text function and the whole test suite runs
//! offline against fixture transcripts and a local mock server.

mod client;
pub mod fixtures;
mod parse;
mod templates;

use thiserror::Error;

pub use client::{
    ChatClient, ChatExchange, ChatMessage, ClientConfig, Role, TokenLogprob, ANSWER_FOOTER,
    ENV_API_KEY, ENV_BASE_URL, ENV_MODEL,
};
pub use parse::{
    parse_ambiguity_reply, parse_verbalized_confidence, yes_no_confidence, AmbiguityVerdict,
    ParseMode,
};
pub use templates::{
    render_template, template, PromptTemplate, TemplateName, AMBIGUITY_BODY, COT_BODY,
    FIXED_LOCATIONS, MULTI_STEP_BODY, SELF_PROBING_BODY, TOP_K_BODY, VANILLA_BODY,
};

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("scene must contain at least one object")]
    EmptyScene,
    #[error("unresolved placeholder near {0:?}")]
    UnresolvedPlaceholder(String),
    #[error("unparseable response: {0}")]
    Unparseable(String),
    #[error("confidence {0} outside [0, 100]")]
    ConfidenceOutOfRange(f64),
    #[error("missing environment variable {0}")]
    MissingEnv(&'static str),
    #[error("credential rejected (http {status})")]
    Credential { status: u16 },
    #[error("request failed (http {status}): {body}")]
    Http { status: u16, body: String },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("retries exhausted after {attempts} attempts: {last}")]
    RetriesExhausted { attempts: u32, last: String },
    #[error("malformed response: {0}")]
    BadResponse(String),
    #[error("fixture file {path}, line {line}: {msg}")]
    Fixture {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
