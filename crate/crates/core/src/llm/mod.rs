//! LLM provider contract, prompt templates and structured-output parsing.

mod http;
mod json;
mod library;
mod scripted;
pub mod template;

pub use http::HttpProvider;
pub use json::extract_json_block;
pub use library::PromptLibrary;
pub use scripted::{prompt_hash, MatchKind, ScriptedProvider, ScriptedRule};
pub use template::{FewShot, PromptTemplate};

use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use tokio_util::sync::CancellationToken;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub prompt: String,
    pub max_tokens: u32,
    #[serde(default)]
    pub temperature: f64,
}

impl CompletionRequest {
    pub fn new(prompt: impl Into<String>) -> Self {
        CompletionRequest {
            prompt: prompt.into(),
            max_tokens: 1024,
            temperature: 0.0,
        }
    }

    pub fn with_max_tokens(mut self, n: u32) -> Self {
        self.max_tokens = n;
        self
    }

    pub fn check(&self) -> Result<()> {
        if self.prompt.trim().is_empty() {
            return Err(Error::InvalidInput("prompt is empty".into()));
        }
        if self.max_tokens == 0 {
            return Err(Error::InvalidInput("max_tokens must be positive".into()));
        }
        if !(self.temperature >= 0.0) {
            return Err(Error::InvalidInput("temperature must be non-negative".into()));
        }
        Ok(())
    }
}

/// Text completion provider. Must support concurrent calls.
#[async_trait]
pub trait LlmProvider: Send + Sync {
    fn name(&self) -> &str;

    async fn complete(&self, req: &CompletionRequest) -> Result<String>;
}

/// One attempt bounded by `timeout`.
pub async fn complete_within(llm: &dyn LlmProvider, req: &CompletionRequest, timeout: Duration) -> Result<String> {
    req.check()?;
    match tokio::time::timeout(timeout, llm.complete(req)).await {
        Ok(res) => res,
        Err(_) => Err(Error::LlmTimeout {
            ms: timeout.as_millis() as u64,
        }),
    }
}

/// A provider bound to a per-call timeout and a request's cancellation
/// token. Cancellation is checked before each call and also ends a call in
/// flight.
#[derive(Clone)]
pub struct LlmClient {
    provider: Arc<dyn LlmProvider>,
    timeout: Duration,
    cancel: CancellationToken,
    max_tokens: u32,
}

impl LlmClient {
    pub fn new(provider: Arc<dyn LlmProvider>, timeout: Duration) -> Self {
        LlmClient {
            provider,
            timeout,
            cancel: CancellationToken::new(),
            max_tokens: 1024,
        }
    }

    pub fn with_cancel(&self, cancel: CancellationToken) -> Self {
        LlmClient {
            cancel,
            ..self.clone()
        }
    }

    pub fn provider(&self) -> &Arc<dyn LlmProvider> {
        &self.provider
    }

    pub fn cancel_token(&self) -> &CancellationToken {
        &self.cancel
    }

    pub fn check_cancelled(&self) -> Result<()> {
        if self.cancel.is_cancelled() {
            Err(Error::Cancelled)
        } else {
            Ok(())
        }
    }

    pub async fn complete(&self, prompt: String) -> Result<String> {
        self.check_cancelled()?;
        let req = CompletionRequest::new(prompt).with_max_tokens(self.max_tokens);
        tokio::select! {
            biased;
            _ = self.cancel.cancelled() => Err(Error::Cancelled),
            res = complete_within(self.provider.as_ref(), &req, self.timeout) => res,
        }
    }
}
