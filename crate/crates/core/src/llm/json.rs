use serde_json::Value;

use crate::error::{Error, Result};

/// Finds the first well-formed JSON object or array in LLM output.
///
/// A fenced code block (```json ... ``` or a bare ``` fence) is preferred;
/// otherwise the text is scanned for the first `{` or `[` that starts a
/// parseable value, ignoring whatever prose follows it.
pub fn extract_json_block(text: &str) -> Result<Value> {
    let mut first_error = None;
    for block in fenced_blocks(text) {
        match parse_prefix(block) {
            Some(Ok(v)) => return Ok(v),
            Some(Err(e)) => {
                first_error.get_or_insert(e);
            }
            None => {}
        }
    }
    for (i, c) in text.char_indices() {
        if c == '{' || c == '[' {
            match parse_prefix(&text[i..]) {
                Some(Ok(v)) => return Ok(v),
                Some(Err(e)) => {
                    first_error.get_or_insert(e);
                }
                None => {}
            }
        }
    }
    match first_error {
        Some(e) => Err(Error::MalformedJson(e)),
        None => Err(Error::NoJsonFound),
    }
}

fn fenced_blocks(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(open) = rest.find("```") {
        let after = &rest[open + 3..];
        // Skip an optional language tag on the fence line.
        let body_start = after
            .find(|c: char| c == '\n' || c == '{' || c == '[')
            .unwrap_or(after.len());
        let body = &after[body_start..];
        match body.find("```") {
            Some(close) => {
                out.push(body[..close].trim());
                rest = &body[close + 3..];
            }
            None => break,
        }
    }
    out
}

/// `None` when `s` does not start with an object or array.
fn parse_prefix(s: &str) -> Option<std::result::Result<Value, String>> {
    let s = s.trim_start();
    if !(s.starts_with('{') || s.starts_with('[')) {
        return None;
    }
    let mut stream = serde_json::Deserializer::from_str(s).into_iter::<Value>();
    Some(match stream.next() {
        Some(Ok(v)) => Ok(v),
        Some(Err(e)) => Err(e.to_string()),
        None => Err("unexpected end of input".to_string()),
    })
}
