use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScopeStatus {
    InScope,
    Out,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScopeVerdict {
    pub status: ScopeStatus,
    pub reason: String,
}

pub const DEFAULT_OUT_REASON: &str = "the available data does not cover this question";
pub const UNPARSEABLE_REASON: &str = "could not confirm that the available data covers this question";

impl ScopeVerdict {
    pub fn in_scope() -> Self {
        ScopeVerdict {
            status: ScopeStatus::InScope,
            reason: String::new(),
        }
    }

    pub fn out(reason: impl Into<String>) -> Self {
        let reason = reason.into();
        ScopeVerdict {
            status: ScopeStatus::Out,
            reason: if reason.trim().is_empty() {
                DEFAULT_OUT_REASON.to_string()
            } else {
                reason
            },
        }
    }

    pub fn is_out(&self) -> bool {
        self.status == ScopeStatus::Out
    }
}

static VERDICT: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?is)^[\s*`>#_-]*(?:verdict|answer)?\s*:?\s*[*`_]*\s*(in[\s_-]*scope|in|out[\s_-]*of[\s_-]*scope|out)\b[*`_]*(.*)$")
        .expect("valid regex")
});

/// Reads an "in" / "out: reason" answer.
pub fn parse_scope_verdict(text: &str) -> Result<ScopeVerdict> {
    let caps = VERDICT
        .captures(text.trim())
        .ok_or_else(|| Error::UnparseableVerdict(text.chars().take(80).collect()))?;
    let word = caps[1].to_ascii_lowercase();
    let rest = caps[2].trim_start_matches(|c: char| c.is_whitespace() || ":-.,;*".contains(c)).trim();
    if word.starts_with("out") {
        Ok(ScopeVerdict::out(rest))
    } else {
        Ok(ScopeVerdict {
            status: ScopeStatus::InScope,
            reason: rest.to_string(),
        })
    }
}

/// Like [`parse_scope_verdict`], but an unreadable answer counts as out of
/// scope. The flag is true when the fallback was taken.
pub fn scope_verdict_or_out(text: &str) -> (ScopeVerdict, bool) {
    match parse_scope_verdict(text) {
        Ok(v) => (v, false),
        Err(_) => {
            tracing::warn!(response = %text.chars().take(80).collect::<String>(), "unparseable scope verdict, treating as out of scope");
            (ScopeVerdict::out(UNPARSEABLE_REASON), true)
        }
    }
}
