//! JSON bodies of the chat service, shared by the server and its clients.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::types::{Branch, ChatResponse, ExecutionTrace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatApiRequest {
    pub query: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session_id: Option<String>,
    /// Overrides the service's notion of today for temporal resolution.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub today: Option<NaiveDate>,
}

impl ChatApiRequest {
    pub fn new(query: impl Into<String>) -> Self {
        ChatApiRequest {
            query: query.into(),
            session_id: None,
            today: None,
        }
    }

    pub fn with_session(mut self, id: impl Into<String>) -> Self {
        self.session_id = Some(id.into());
        self
    }

    pub fn with_today(mut self, today: NaiveDate) -> Self {
        self.today = Some(today);
        self
    }
}

/// A `ChatResponse` on the wire. The trace is absent only when the caller
/// opted out with `?trace=false`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatApiResponse {
    pub answer: String,
    pub branch: Branch,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<ExecutionTrace>,
    pub latency_ms: u64,
}

impl From<ChatResponse> for ChatApiResponse {
    fn from(r: ChatResponse) -> Self {
        ChatApiResponse {
            answer: r.answer,
            branch: r.branch,
            trace: Some(r.trace),
            latency_ms: r.latency_ms,
        }
    }
}

impl ChatApiResponse {
    pub fn without_trace(mut self) -> Self {
        self.trace = None;
        self
    }

    /// Back to the engine's type; a missing trace becomes an empty one.
    pub fn into_chat_response(self) -> ChatResponse {
        ChatResponse {
            answer: self.answer,
            branch: self.branch,
            trace: self.trace.unwrap_or_default(),
            latency_ms: self.latency_ms,
        }
    }
}

/// Body of every non-2xx response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    /// Partial trace, kept when a request ran out of time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<ExecutionTrace>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HealthResponse {
    pub status: String,
    pub models_loaded: bool,
}
