//! Thin async client for the chat service.

use std::time::Duration;

use async_trait::async_trait;
use insight_core::api::{ChatApiRequest, ChatApiResponse, ErrorBody, HealthResponse};
use insight_core::eval::ChatBackend;
use insight_core::types::{ChatResponse, SessionId};
use insight_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("request to {url} failed: {message}")]
    Transport { url: String, message: String },
    #[error("service answered {status}: {} ({})", .body.message, .body.code)]
    Api { status: u16, body: ErrorBody },
    #[error("could not decode service response: {0}")]
    Decode(String),
    #[error("service at {0} did not become ready in time")]
    NotReady(String),
}

impl ClientError {
    pub fn code(&self) -> Option<&str> {
        match self {
            ClientError::Api { body, .. } => Some(&body.code),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct InsightClient {
    base: String,
    http: reqwest::Client,
}

impl InsightClient {
    /// `base_url` is the service root, e.g. `http://127.0.0.1:8080`.
    pub fn new(base_url: impl Into<String>) -> Self {
        Self::with_timeout(base_url, Duration::from_secs(120))
    }

    pub fn with_timeout(base_url: impl Into<String>, timeout: Duration) -> Self {
        let base = base_url.into().trim_end_matches('/').to_string();
        let http = reqwest::Client::builder().timeout(timeout).build().expect("static client config");
        InsightClient { base, http }
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    fn transport(&self, path: &str, e: reqwest::Error) -> ClientError {
        ClientError::Transport {
            url: format!("{}{path}", self.base),
            message: e.to_string(),
        }
    }

    pub async fn health(&self) -> Result<HealthResponse, ClientError> {
        let resp = self.http.get(format!("{}/v1/health", self.base)).send().await.map_err(|e| self.transport("/v1/health", e))?;
        decode(resp).await
    }

    pub async fn chat(&self, req: &ChatApiRequest) -> Result<ChatApiResponse, ClientError> {
        self.post_chat(req, true).await
    }

    /// Same as [`chat`](Self::chat) but asks the service to leave out the
    /// trace.
    pub async fn chat_without_trace(&self, req: &ChatApiRequest) -> Result<ChatApiResponse, ClientError> {
        self.post_chat(req, false).await
    }

    async fn post_chat(&self, req: &ChatApiRequest, trace: bool) -> Result<ChatApiResponse, ClientError> {
        let url = if trace {
            format!("{}/v1/chat", self.base)
        } else {
            format!("{}/v1/chat?trace=false", self.base)
        };
        let resp = self.http.post(url).json(req).send().await.map_err(|e| self.transport("/v1/chat", e))?;
        decode(resp).await
    }

    /// Polls the health endpoint until the models are loaded.
    pub async fn wait_ready(&self, timeout: Duration) -> Result<(), ClientError> {
        let deadline = tokio::time::Instant::now() + timeout;
        loop {
            if let Ok(h) = self.health().await {
                if h.models_loaded {
                    return Ok(());
                }
            }
            if tokio::time::Instant::now() >= deadline {
                return Err(ClientError::NotReady(self.base.clone()));
            }
            tokio::time::sleep(Duration::from_millis(100)).await;
        }
    }
}

async fn decode<T: serde::de::DeserializeOwned>(resp: reqwest::Response) -> Result<T, ClientError> {
    let status = resp.status();
    let bytes = resp.bytes().await.map_err(|e| ClientError::Decode(e.to_string()))?;
    if status.is_success() {
        return serde_json::from_slice(&bytes).map_err(|e| ClientError::Decode(e.to_string()));
    }
    let body = serde_json::from_slice(&bytes).unwrap_or_else(|_| ErrorBody {
        code: format!("HTTP_{}", status.as_u16()),
        message: String::from_utf8_lossy(&bytes).into_owned(),
        trace: None,
    });
    Err(ClientError::Api {
        status: status.as_u16(),
        body,
    })
}

#[async_trait]
impl ChatBackend for InsightClient {
    async fn chat(&self, query: &str, session: &SessionId) -> insight_core::Result<ChatResponse> {
        let req = ChatApiRequest::new(query).with_session(session.as_str());
        match InsightClient::chat(self, &req).await {
            Ok(r) => Ok(r.into_chat_response()),
            Err(ClientError::Api { body, .. }) => Err(match body.code.as_str() {
                "EMPTY_QUERY" => CoreError::EmptyQuery,
                "TOTAL_TIMEOUT" => CoreError::TotalTimeout { ms: 0 },
                _ => CoreError::Provider(format!("{}: {}", body.code, body.message)),
            }),
            Err(e) => Err(CoreError::Provider(e.to_string())),
        }
    }
}
