//! Prompt templates with named `{slot}` placeholders and few-shot examples.
//!
//! `{{` and `}}` render as literal braces. Few-shot inputs and outputs are
//! inserted verbatim, never substituted.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FewShot {
    pub input: String,
    pub output: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub name: String,
    #[serde(default = "default_version")]
    pub version: String,
    pub body: String,
    #[serde(default)]
    pub few_shot: Vec<FewShot>,
}

fn default_version() -> String {
    "1".to_string()
}

enum Piece<'a> {
    Text(&'a str),
    Slot(&'a str),
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase() || c == '_')
        && chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
}

fn parse(body: &str) -> Vec<Piece<'_>> {
    let mut out = Vec::new();
    let bytes = body.as_bytes();
    let mut i = 0;
    let mut text_start = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'{' if bytes.get(i + 1) == Some(&b'{') => {
                out.push(Piece::Text(&body[text_start..i + 1]));
                i += 2;
                text_start = i;
            }
            b'}' if bytes.get(i + 1) == Some(&b'}') => {
                out.push(Piece::Text(&body[text_start..i + 1]));
                i += 2;
                text_start = i;
            }
            b'{' => {
                if let Some(len) = body[i + 1..].find('}') {
                    let name = &body[i + 1..i + 1 + len];
                    if is_ident(name) {
                        out.push(Piece::Text(&body[text_start..i]));
                        out.push(Piece::Slot(name));
                        i += len + 2;
                        text_start = i;
                        continue;
                    }
                }
                i += 1;
            }
            _ => i += 1,
        }
    }
    out.push(Piece::Text(&body[text_start..]));
    out
}

impl PromptTemplate {
    pub fn new(name: impl Into<String>, body: impl Into<String>) -> Self {
        PromptTemplate {
            name: name.into(),
            version: default_version(),
            body: body.into(),
            few_shot: Vec::new(),
        }
    }

    pub fn with_example(mut self, input: impl Into<String>, output: impl Into<String>) -> Self {
        self.few_shot.push(FewShot {
            input: input.into(),
            output: output.into(),
        });
        self
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("prompt template: {e}")))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Placeholder names used by the body, sorted.
    pub fn placeholders(&self) -> BTreeSet<&str> {
        parse(&self.body)
            .into_iter()
            .filter_map(|p| match p {
                Piece::Slot(s) => Some(s),
                Piece::Text(_) => None,
            })
            .collect()
    }

    pub fn render(&self, slots: &BTreeMap<&str, String>) -> Result<String> {
        let mut out = String::new();
        if !self.few_shot.is_empty() {
            out.push_str("Examples:\n\n");
            for ex in &self.few_shot {
                out.push_str("Input:\n");
                out.push_str(ex.input.trim_end());
                out.push_str("\nOutput:\n");
                out.push_str(ex.output.trim_end());
                out.push_str("\n\n");
            }
            out.push_str("Task:\n");
        }
        for piece in parse(&self.body) {
            match piece {
                Piece::Text(t) => out.push_str(t),
                Piece::Slot(name) => {
                    let value = slots.get(name).ok_or_else(|| Error::MissingSlot(name.to_string()))?;
                    out.push_str(value);
                }
            }
        }
        Ok(out)
    }
}

/// Renders `template` with `(name, value)` pairs.
pub fn render(template: &PromptTemplate, slots: &[(&str, &str)]) -> Result<String> {
    let map: BTreeMap<&str, String> = slots.iter().map(|(k, v)| (*k, v.to_string())).collect();
    template.render(&map)
}
