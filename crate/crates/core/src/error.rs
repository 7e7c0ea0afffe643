//! Shared error taxonomy.
//!
//! Every failure in the engine maps onto one [`Error`] variant, and every
//! variant has a stable machine-readable [`ErrorCode`] that the HTTP service
//! and the CLI expose verbatim.

use serde::{Deserialize, Serialize};

use crate::manager::guardrail::GuardrailReason;
use crate::workflow::validate::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Stable, serializable error codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ErrorCode {
    EmptyQuery,
    QueryTooLong,
    EmptyText,
    ProviderUnavailable,
    DimensionMismatch,
    TooFewSamples,
    NonFiniteLoss,
    SingleClassData,
    LlmTimeout,
    NoScriptedMatch,
    ProviderError,
    MissingSlot,
    NoJsonFound,
    MalformedJson,
    UnknownApi,
    PayloadInvalid,
    UnknownFunction,
    ArgsInvalid,
    ArithmeticDomain,
    DataOutOfScope,
    UnparseableVerdict,
    PlanEmpty,
    PlanInvalid,
    StepFailed,
    GuardrailBlocked,
    Cancelled,
    TotalTimeout,
    NoKeywords,
    NoInsights,
    EmptyInput,
    InsufficientVariation,
    InvalidInput,
    Config,
    Io,
    Serialization,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::EmptyQuery => "EMPTY_QUERY",
            ErrorCode::QueryTooLong => "QUERY_TOO_LONG",
            ErrorCode::EmptyText => "EMPTY_TEXT",
            ErrorCode::ProviderUnavailable => "PROVIDER_UNAVAILABLE",
            ErrorCode::DimensionMismatch => "DIMENSION_MISMATCH",
            ErrorCode::TooFewSamples => "TOO_FEW_SAMPLES",
            ErrorCode::NonFiniteLoss => "NON_FINITE_LOSS",
            ErrorCode::SingleClassData => "SINGLE_CLASS_DATA",
            ErrorCode::LlmTimeout => "LLM_TIMEOUT",
            ErrorCode::NoScriptedMatch => "NO_SCRIPTED_MATCH",
            ErrorCode::ProviderError => "PROVIDER_ERROR",
            ErrorCode::MissingSlot => "MISSING_SLOT",
            ErrorCode::NoJsonFound => "NO_JSON_FOUND",
            ErrorCode::MalformedJson => "MALFORMED_JSON",
            ErrorCode::UnknownApi => "UNKNOWN_API",
            ErrorCode::PayloadInvalid => "PAYLOAD_INVALID",
            ErrorCode::UnknownFunction => "UNKNOWN_FUNCTION",
            ErrorCode::ArgsInvalid => "ARGS_INVALID",
            ErrorCode::ArithmeticDomain => "ARITHMETIC_DOMAIN",
            ErrorCode::DataOutOfScope => "DATA_OUT_OF_SCOPE",
            ErrorCode::UnparseableVerdict => "UNPARSEABLE_VERDICT",
            ErrorCode::PlanEmpty => "PLAN_EMPTY",
            ErrorCode::PlanInvalid => "PLAN_INVALID",
            ErrorCode::StepFailed => "STEP_FAILED",
            ErrorCode::GuardrailBlocked => "GUARDRAIL_BLOCKED",
            ErrorCode::Cancelled => "CANCELLED",
            ErrorCode::TotalTimeout => "TOTAL_TIMEOUT",
            ErrorCode::NoKeywords => "NO_KEYWORDS",
            ErrorCode::NoInsights => "NO_INSIGHTS",
            ErrorCode::EmptyInput => "EMPTY_INPUT",
            ErrorCode::InsufficientVariation => "INSUFFICIENT_VARIATION",
            ErrorCode::InvalidInput => "INVALID_INPUT",
            ErrorCode::Config => "CONFIG",
            ErrorCode::Io => "IO",
            ErrorCode::Serialization => "SERIALIZATION",
        }
    }
}

impl std::fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("query is empty")]
    EmptyQuery,
    #[error("query has {len} characters, the limit is {max}")]
    QueryTooLong { len: usize, max: usize },
    #[error("cannot embed empty text")]
    EmptyText,
    #[error("embedding provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("training loss became non-finite at epoch {epoch}; lower the learning rate")]
    NonFiniteLoss { epoch: usize },
    #[error("training data contains a single class")]
    SingleClassData,
    #[error("LLM call exceeded {ms} ms")]
    LlmTimeout { ms: u64 },
    #[error("no scripted rule matches prompt starting with {prompt_head:?}")]
    NoScriptedMatch { prompt_head: String },
    #[error("LLM provider error: {0}")]
    Provider(String),
    #[error("template slot {0:?} was not supplied")]
    MissingSlot(String),
    #[error("no JSON object or array found in text")]
    NoJsonFound,
    #[error("malformed JSON: {0}")]
    MalformedJson(String),
    #[error("unknown API {0:?}")]
    UnknownApi(String),
    #[error("invalid payload: {0}")]
    PayloadInvalid(String),
    #[error("unknown function {0:?}")]
    UnknownFunction(String),
    #[error("invalid function arguments: {0}")]
    ArgsInvalid(String),
    #[error("arithmetic domain error: {0}")]
    ArithmeticDomain(String),
    #[error("question is outside the available data: {0}")]
    DataOutOfScope(String),
    #[error("could not parse scope verdict from {0:?}")]
    UnparseableVerdict(String),
    #[error("plan has no steps")]
    PlanEmpty,
    #[error("plan failed validation with {} violation(s)", .0.len())]
    PlanInvalid(Vec<Violation>),
    #[error("step {step_id:?} failed: {source}")]
    StepFailed {
        step_id: String,
        #[source]
        source: Box<Error>,
    },
    #[error("response blocked by guardrail ({0})")]
    GuardrailBlocked(GuardrailReason),
    #[error("cancelled")]
    Cancelled,
    #[error("request exceeded its {ms} ms budget")]
    TotalTimeout { ms: u64 },
    #[error("benchmark item has no keywords")]
    NoKeywords,
    #[error("response contains no insights")]
    NoInsights,
    #[error("input is empty")]
    EmptyInput,
    #[error("could only produce {produced} unique variants of class {class}, target {target}")]
    InsufficientVariation {
        class: String,
        produced: usize,
        target: usize,
    },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("serialization error: {0}")]
    Serialization(String),
}

impl Error {
    pub fn code(&self) -> ErrorCode {
        match self {
            Error::EmptyQuery => ErrorCode::EmptyQuery,
            Error::QueryTooLong { .. } => ErrorCode::QueryTooLong,
            Error::EmptyText => ErrorCode::EmptyText,
            Error::ProviderUnavailable(_) => ErrorCode::ProviderUnavailable,
            Error::DimensionMismatch { .. } => ErrorCode::DimensionMismatch,
            Error::TooFewSamples { .. } => ErrorCode::TooFewSamples,
            Error::NonFiniteLoss { .. } => ErrorCode::NonFiniteLoss,
            Error::SingleClassData => ErrorCode::SingleClassData,
            Error::LlmTimeout { .. } => ErrorCode::LlmTimeout,
            Error::NoScriptedMatch { .. } => ErrorCode::NoScriptedMatch,
            Error::Provider(_) => ErrorCode::ProviderError,
            Error::MissingSlot(_) => ErrorCode::MissingSlot,
            Error::NoJsonFound => ErrorCode::NoJsonFound,
            Error::MalformedJson(_) => ErrorCode::MalformedJson,
            Error::UnknownApi(_) => ErrorCode::UnknownApi,
            Error::PayloadInvalid(_) => ErrorCode::PayloadInvalid,
            Error::UnknownFunction(_) => ErrorCode::UnknownFunction,
            Error::ArgsInvalid(_) => ErrorCode::ArgsInvalid,
            Error::ArithmeticDomain(_) => ErrorCode::ArithmeticDomain,
            Error::DataOutOfScope(_) => ErrorCode::DataOutOfScope,
            Error::UnparseableVerdict(_) => ErrorCode::UnparseableVerdict,
            Error::PlanEmpty => ErrorCode::PlanEmpty,
            Error::PlanInvalid(_) => ErrorCode::PlanInvalid,
            Error::StepFailed { .. } => ErrorCode::StepFailed,
            Error::GuardrailBlocked(_) => ErrorCode::GuardrailBlocked,
            Error::Cancelled => ErrorCode::Cancelled,
            Error::TotalTimeout { .. } => ErrorCode::TotalTimeout,
            Error::NoKeywords => ErrorCode::NoKeywords,
            Error::NoInsights => ErrorCode::NoInsights,
            Error::EmptyInput => ErrorCode::EmptyInput,
            Error::InsufficientVariation { .. } => ErrorCode::InsufficientVariation,
            Error::InvalidInput(_) => ErrorCode::InvalidInput,
            Error::Config(_) => ErrorCode::Config,
            Error::Io(_) => ErrorCode::Io,
            Error::Serialization(_) => ErrorCode::Serialization,
        }
    }

    /// The innermost error, looking through step wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::StepFailed { source, .. } => source.root(),
            other => other,
        }
    }

    /// Whether the caller supplied bad input (as opposed to an engine or
    /// provider failure).
    pub fn is_user_error(&self) -> bool {
        matches!(
            self.root().code(),
            ErrorCode::EmptyQuery
                | ErrorCode::QueryTooLong
                | ErrorCode::EmptyText
                | ErrorCode::InvalidInput
                | ErrorCode::Config
                | ErrorCode::Io
                | ErrorCode::Serialization
                | ErrorCode::EmptyInput
                | ErrorCode::TooFewSamples
                | ErrorCode::SingleClassData
                | ErrorCode::NoKeywords
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

/// Serializable `{code, message}` pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorInfo {
    pub code: ErrorCode,
    pub message: String,
}

impl From<&Error> for ErrorInfo {
    fn from(e: &Error) -> Self {
        ErrorInfo {
            code: e.code(),
            message: e.to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes_serialize_as_screaming_snake() {
        for code in [ErrorCode::EmptyQuery, ErrorCode::PlanInvalid, ErrorCode::LlmTimeout] {
            let json = serde_json::to_string(&code).unwrap();
            assert_eq!(json, format!("\"{}\"", code.as_str()));
            let back: ErrorCode = serde_json::from_str(&json).unwrap();
            assert_eq!(back, code);
        }
    }

    #[test]
    fn step_wrapper_exposes_root_cause() {
        let e = Error::StepFailed {
            step_id: "s2".into(),
            source: Box::new(Error::ArgsInvalid("k must be positive".into())),
        };
        assert_eq!(e.code(), ErrorCode::StepFailed);
        assert_eq!(e.root().code(), ErrorCode::ArgsInvalid);
        assert!(e.to_string().contains("s2"));
    }
}
