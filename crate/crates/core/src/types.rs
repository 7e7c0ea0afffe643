//! Request, response and trace types shared by every module.

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, ErrorInfo, Result};
use crate::manager::guardrail::GuardrailVerdict;
use crate::workers::DomainCategory;
use crate::workflow::plan::Plan;
use crate::workflow::scope::ScopeVerdict;

pub const MAX_QUERY_CHARS: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SessionId(pub String);

impl SessionId {
    pub fn new(id: impl Into<String>) -> Self {
        SessionId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl Default for SessionId {
    fn default() -> Self {
        SessionId("default".to_string())
    }
}

/// A validated seller turn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub text: String,
    pub session_id: SessionId,
    pub asked_at: DateTime<Utc>,
}

impl Query {
    pub fn new(raw: &str, session_id: SessionId, asked_at: DateTime<Utc>) -> Result<Self> {
        let text = validate_query_text(raw)?;
        Ok(Query {
            text,
            session_id,
            asked_at,
        })
    }
}

/// Trims `raw` and checks the length bounds.
pub fn validate_query(raw: &str) -> Result<Query> {
    Query::new(raw, SessionId::default(), Utc::now())
}

fn validate_query_text(raw: &str) -> Result<String> {
    let text = raw.trim();
    if text.is_empty() {
        return Err(Error::EmptyQuery);
    }
    let len = text.chars().count();
    if len > MAX_QUERY_CHARS {
        return Err(Error::QueryTooLong {
            len,
            max: MAX_QUERY_CHARS,
        });
    }
    Ok(text.to_string())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SellerContext {
    pub seller_id: String,
    pub today: NaiveDate,
    #[serde(default = "default_locale")]
    pub locale: String,
}

fn default_locale() -> String {
    "en-US".to_string()
}

impl SellerContext {
    pub fn new(seller_id: impl Into<String>, today: NaiveDate) -> Self {
        SellerContext {
            seller_id: seller_id.into(),
            today,
            locale: default_locale(),
        }
    }
}

/// The two worker resolution paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Presenter,
    InsightGenerator,
}

impl Route {
    pub fn as_str(self) -> &'static str {
        match self {
            Route::Presenter => "presenter",
            Route::InsightGenerator => "insight_generator",
        }
    }

    pub fn other(self) -> Route {
        match self {
            Route::Presenter => Route::InsightGenerator,
            Route::InsightGenerator => Route::Presenter,
        }
    }
}

impl std::fmt::Display for Route {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which path produced the outbound answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Presenter,
    InsightGenerator,
    Refused,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Presenter => "presenter",
            Branch::InsightGenerator => "insight_generator",
            Branch::Refused => "refused",
        }
    }
}

impl From<Route> for Branch {
    fn from(r: Route) -> Self {
        match r {
            Route::Presenter => Branch::Presenter,
            Route::InsightGenerator => Branch::InsightGenerator,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateVerdict {
    InDomain,
    OutOfDomain,
}

/// Wall-clock record of one pipeline stage or plan step, relative to the
/// start of the request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepTiming {
    pub step_id: String,
    pub started_ms: f64,
    pub elapsed_ms: f64,
}

impl StepTiming {
    pub fn ended_ms(&self) -> f64 {
        self.started_ms + self.elapsed_ms
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchStatus {
    Won,
    Cancelled,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchRecord {
    pub branch: Route,
    pub status: BranchStatus,
    pub elapsed_ms: f64,
}

/// One machine-readable claim backing an answer: a metric value for a
/// subject (a product, a period, or the whole business).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportingFact {
    pub subject: String,
    pub metric: String,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comparison: Option<String>,
}

/// Everything needed to audit or replay how an answer was produced.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExecutionTrace {
    pub gate_verdict: Option<GateVerdict>,
    pub gate_score: f64,
    pub gate_threshold: f64,
    pub route: Option<Route>,
    pub route_confidence: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub augmented_query: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scope: Option<ScopeVerdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainCategory>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<Plan>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub planner_response: Option<String>,
    #[serde(default)]
    pub plan_attempts: u32,
    /// Plan steps (or analysis API calls) in execution order.
    #[serde(default)]
    pub step_timings: Vec<StepTiming>,
    /// Pipeline stages: embedding, gate, scope check, planning, generation.
    #[serde(default)]
    pub stage_timings: Vec<StepTiming>,
    #[serde(default)]
    pub supporting: Vec<SupportingFact>,
    #[serde(default)]
    pub branches: Vec<BranchRecord>,
    pub guardrail: Option<GuardrailVerdict>,
    #[serde(default)]
    pub guardrail_checks: u32,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorInfo>,
}

/// The guarded outbound answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub answer: String,
    pub branch: Branch,
    pub trace: ExecutionTrace,
    pub latency_ms: u64,
}
