//! Rule-based outbound screen for PII and toxic language.

use regex::{Regex, RegexBuilder};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_RULES: &str = include_str!("../../config/guardrail.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GuardrailReason {
    PiiEmail,
    PiiPhone,
    PiiNationalId,
    ToxicTerm,
}

impl GuardrailReason {
    pub fn as_str(self) -> &'static str {
        match self {
            GuardrailReason::PiiEmail => "PII_EMAIL",
            GuardrailReason::PiiPhone => "PII_PHONE",
            GuardrailReason::PiiNationalId => "PII_NATIONAL_ID",
            GuardrailReason::ToxicTerm => "TOXIC_TERM",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "PII_EMAIL" => Some(GuardrailReason::PiiEmail),
            "PII_PHONE" => Some(GuardrailReason::PiiPhone),
            "PII_NATIONAL_ID" => Some(GuardrailReason::PiiNationalId),
            "TOXIC_TERM" => Some(GuardrailReason::ToxicTerm),
            _ => None,
        }
    }
}

impl std::fmt::Display for GuardrailReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GuardrailStatus {
    Pass,
    Blocked,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuardrailVerdict {
    pub status: GuardrailStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<GuardrailReason>,
}

impl GuardrailVerdict {
    pub const PASS: GuardrailVerdict = GuardrailVerdict {
        status: GuardrailStatus::Pass,
        reason: None,
    };

    pub fn blocked(reason: GuardrailReason) -> Self {
        GuardrailVerdict {
            status: GuardrailStatus::Blocked,
            reason: Some(reason),
        }
    }

    pub fn is_blocked(&self) -> bool {
        self.status == GuardrailStatus::Blocked
    }
}

#[derive(Debug, Clone)]
struct Rule {
    reason: GuardrailReason,
    pattern: Regex,
}

#[derive(Debug, Clone)]
pub struct Guardrail {
    rules: Vec<Rule>,
}

impl Guardrail {
    /// Parses `<REASON> <pattern>` lines; blank lines and `#` comments are
    /// skipped.
    pub fn from_rules(text: &str) -> Result<Self> {
        let mut rules = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (tag, pattern) = line
                .split_once(char::is_whitespace)
                .map(|(a, b)| (a, b.trim()))
                .ok_or_else(|| Error::Config(format!("guardrail line {}: expected '<REASON> <pattern>'", lineno + 1)))?;
            let reason = GuardrailReason::parse(tag)
                .ok_or_else(|| Error::Config(format!("guardrail line {}: unknown reason {tag:?}", lineno + 1)))?;
            let source = match reason {
                GuardrailReason::ToxicTerm => format!(r"\b{}\b", regex::escape(pattern)),
                _ => pattern.to_string(),
            };
            let pattern = RegexBuilder::new(&source)
                .case_insensitive(reason == GuardrailReason::ToxicTerm)
                .build()
                .map_err(|e| Error::Config(format!("guardrail line {}: {e}", lineno + 1)))?;
            rules.push(Rule { reason, pattern });
        }
        // Stable: file order is preserved within a category.
        rules.sort_by_key(|r| r.reason);
        Ok(Guardrail { rules })
    }

    pub fn screen(&self, text: &str) -> GuardrailVerdict {
        self.rules
            .iter()
            .find(|r| r.pattern.is_match(text))
            .map_or(GuardrailVerdict::PASS, |r| GuardrailVerdict::blocked(r.reason))
    }

    pub fn rule_count(&self) -> usize {
        self.rules.len()
    }
}

impl Default for Guardrail {
    fn default() -> Self {
        Guardrail::from_rules(DEFAULT_RULES).expect("built-in guardrail rules parse")
    }
}

pub fn guardrail_screen(guardrail: &Guardrail, text: &str) -> GuardrailVerdict {
    guardrail.screen(text)
}
