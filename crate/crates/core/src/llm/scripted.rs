use std::path::Path;
use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{CompletionRequest, LlmProvider};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatchKind {
    /// `key` is the lowercase hex SHA-256 of the whole prompt.
    ExactPromptHash,
    ContainsSubstring,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptedRule {
    #[serde(rename = "match")]
    pub match_kind: MatchKind,
    pub key: String,
    pub response: String,
    /// Artificial latency, for exercising timeouts and cancellation.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub delay_ms: u64,
}

fn is_zero(v: &u64) -> bool {
    *v == 0
}

impl ScriptedRule {
    pub fn contains(key: impl Into<String>, response: impl Into<String>) -> Self {
        ScriptedRule {
            match_kind: MatchKind::ContainsSubstring,
            key: key.into(),
            response: response.into(),
            delay_ms: 0,
        }
    }

    pub fn exact(prompt: &str, response: impl Into<String>) -> Self {
        ScriptedRule {
            match_kind: MatchKind::ExactPromptHash,
            key: prompt_hash(prompt),
            response: response.into(),
            delay_ms: 0,
        }
    }

    pub fn with_delay(mut self, ms: u64) -> Self {
        self.delay_ms = ms;
        self
    }

    fn matches(&self, prompt: &str, hash: &str) -> bool {
        match self.match_kind {
            MatchKind::ExactPromptHash => self.key.eq_ignore_ascii_case(hash),
            MatchKind::ContainsSubstring => prompt.contains(&self.key),
        }
    }
}

pub fn prompt_hash(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

/// Deterministic test double: the first matching rule answers.
#[derive(Debug, Clone, Default)]
pub struct ScriptedProvider {
    rules: Vec<ScriptedRule>,
}

impl ScriptedProvider {
    pub fn new(rules: Vec<ScriptedRule>) -> Self {
        ScriptedProvider { rules }
    }

    /// Loads a JSON array of rules.
    pub fn from_json(json: &str) -> Result<Self> {
        let rules: Vec<ScriptedRule> = serde_json::from_str(json)?;
        Ok(ScriptedProvider { rules })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn rules(&self) -> &[ScriptedRule] {
        &self.rules
    }

    pub fn push(&mut self, rule: ScriptedRule) {
        self.rules.push(rule);
    }

    pub fn lookup(&self, prompt: &str) -> Option<&ScriptedRule> {
        let hash = prompt_hash(prompt);
        self.rules.iter().find(|r| r.matches(prompt, &hash))
    }
}

#[async_trait]
impl LlmProvider for ScriptedProvider {
    fn name(&self) -> &str {
        "scripted"
    }

    async fn complete(&self, req: &CompletionRequest) -> Result<String> {
        let rule = self.lookup(&req.prompt).ok_or_else(|| Error::NoScriptedMatch {
            prompt_head: req.prompt.chars().take(80).collect(),
        })?;
        if rule.delay_ms > 0 {
            tokio::time::sleep(Duration::from_millis(rule.delay_ms)).await;
        }
        Ok(rule.response.clone())
    }
}
