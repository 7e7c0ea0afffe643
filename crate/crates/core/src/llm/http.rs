use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};

use super::{CompletionRequest, LlmProvider};
use crate::error::{Error, Result};

pub const TOKEN_ENV: &str = "LLM_API_TOKEN";

#[derive(Serialize)]
struct WireRequest<'a> {
    prompt: &'a str,
    max_tokens: u32,
    temperature: f64,
}

#[derive(Deserialize)]
struct WireResponse {
    text: String,
}

/// Generic chat-completion endpoint.
///
/// `POST {url}` with `{"prompt", "max_tokens", "temperature"}`, answered by
/// `{"text": "..."}`. A bearer token is read from `LLM_API_TOKEN` when set.
/// One attempt per call; timeouts and fallbacks belong to the caller.
#[derive(Clone)]
pub struct HttpProvider {
    url: String,
    token: Option<String>,
    agent: ureq::Agent,
}

impl HttpProvider {
    pub fn new(url: impl Into<String>, timeout: Duration) -> Self {
        Self::with_token(url, std::env::var(TOKEN_ENV).ok(), timeout)
    }

    pub fn with_token(url: impl Into<String>, token: Option<String>, timeout: Duration) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        HttpProvider {
            url: url.into(),
            token,
            agent,
        }
    }

    fn call(&self, req: &CompletionRequest) -> Result<String> {
        let mut builder = self.agent.post(&self.url);
        if let Some(token) = &self.token {
            builder = builder.header("Authorization", format!("Bearer {token}"));
        }
        let mut resp = builder
            .send_json(WireRequest {
                prompt: &req.prompt,
                max_tokens: req.max_tokens,
                temperature: req.temperature,
            })
            .map_err(|e| Error::Provider(e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            let body = resp.body_mut().read_to_string().unwrap_or_default();
            return Err(Error::Provider(format!("HTTP {status}: {}", body.chars().take(200).collect::<String>())));
        }
        let body: WireResponse = resp
            .body_mut()
            .read_json()
            .map_err(|e| Error::Provider(format!("bad response body: {e}")))?;
        if body.text.trim().is_empty() {
            return Err(Error::Provider("provider returned empty text".into()));
        }
        Ok(body.text)
    }
}

#[async_trait]
impl LlmProvider for HttpProvider {
    fn name(&self) -> &str {
        "http"
    }

    async fn complete(&self, req: &CompletionRequest) -> Result<String> {
        let this = self.clone();
        let req = req.clone();
        tokio::task::spawn_blocking(move || this.call(&req))
            .await
            .map_err(|e| Error::Provider(format!("request task failed: {e}")))?
    }
}
