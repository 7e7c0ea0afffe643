use serde::{Deserialize, Serialize};

use crate::types::{Branch, ChatResponse, ExecutionTrace, GateVerdict};

/// Why the engine declined to answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", content = "detail", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RefusalReason {
    OutOfDomain,
    DataOutOfScope(String),
    GuardrailBlocked,
    TotalTimeout,
    /// An internal failure; the detail is not shown to the seller.
    Error(String),
    /// A reason code this build does not know.
    Unknown(String),
}

impl RefusalReason {
    pub fn from_code(code: &str, detail: Option<&str>) -> Self {
        match code {
            "OUT_OF_DOMAIN" => RefusalReason::OutOfDomain,
            "DATA_OUT_OF_SCOPE" => RefusalReason::DataOutOfScope(detail.unwrap_or_default().to_string()),
            "GUARDRAIL_BLOCKED" => RefusalReason::GuardrailBlocked,
            "TOTAL_TIMEOUT" => RefusalReason::TotalTimeout,
            other => RefusalReason::Unknown(other.to_string()),
        }
    }
}

/// Seller-facing refusal copy. `data_out_of_scope` may contain `{reason}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RefusalMessages {
    pub out_of_domain: String,
    pub data_out_of_scope: String,
    pub guardrail: String,
    pub timeout: String,
    pub error: String,
    pub generic: String,
}

impl Default for RefusalMessages {
    fn default() -> Self {
        RefusalMessages {
            out_of_domain: "Sorry, I can only help with questions about your store's sales, traffic and performance data."
                .into(),
            data_out_of_scope: "Sorry, I don't have the data to answer that: {reason}.".into(),
            guardrail: "Sorry, I can't share that response. Please rephrase your question.".into(),
            timeout: "Sorry, that took longer than expected. Please try again in a moment.".into(),
            error: "Sorry, something went wrong while answering. Please try rephrasing your question.".into(),
            generic: "Sorry, I can't help with that request.".into(),
        }
    }
}

impl RefusalMessages {
    pub fn text(&self, reason: &RefusalReason) -> String {
        match reason {
            RefusalReason::OutOfDomain => self.out_of_domain.clone(),
            RefusalReason::DataOutOfScope(why) => {
                let why = why.trim().trim_end_matches('.');
                let why = if why.is_empty() { "the question needs data I can't access" } else { why };
                self.data_out_of_scope.replace("{reason}", why)
            }
            RefusalReason::GuardrailBlocked => self.guardrail.clone(),
            RefusalReason::TotalTimeout => self.timeout.clone(),
            RefusalReason::Error(_) => self.error.clone(),
            RefusalReason::Unknown(_) => self.generic.clone(),
        }
    }
}

/// A standalone refusal with an otherwise empty trace.
pub fn refusal_response(messages: &RefusalMessages, reason: &RefusalReason) -> ChatResponse {
    let mut trace = ExecutionTrace::default();
    if *reason == RefusalReason::OutOfDomain {
        trace.gate_verdict = Some(GateVerdict::OutOfDomain);
    }
    ChatResponse {
        answer: messages.text(reason),
        branch: Branch::Refused,
        trace,
        latency_ms: 0,
    }
}
