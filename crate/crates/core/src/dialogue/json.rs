//! Pulling one JSON value out of free-form model output.

use std::sync::OnceLock;

use regex::Regex;
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("no JSON object or array found in model output: {excerpt:?}")]
pub struct JsonExtractError {
    pub excerpt: String,
}

fn fence_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?s)```[A-Za-z0-9_-]*[ \t]*\n?(.*?)```").expect("valid regex"))
}

fn structured(text: &str) -> Option<Value> {
    match serde_json::from_str::<Value>(text.trim()) {
        Ok(v @ (Value::Object(_) | Value::Array(_))) => Some(v),
        _ => None,
    }
}

/// Returns the first JSON object or array in `text`.
///
/// Tried in order: the whole string, the contents of each code fence, then
/// every balanced `{...}` / `[...]` span (string literals respected) from
/// left to right. A span still open at the end of the text means the output
/// was cut off; nothing nested inside it is tried. The returned value is
/// parsed as-is; nothing inside it is rewritten.
pub fn extract_json(text: &str) -> Result<Value, JsonExtractError> {
    if let Some(v) = structured(text) {
        return Ok(v);
    }
    for cap in fence_re().captures_iter(text) {
        if let Some(v) = structured(&cap[1]) {
            return Ok(v);
        }
    }
    let bytes = text.as_bytes();
    for (start, &b) in bytes.iter().enumerate() {
        if b != b'{' && b != b'[' {
            continue;
        }
        match scan(bytes, start) {
            Span::Closed(end) => {
                if let Some(v) = structured(&text[start..end]) {
                    return Ok(v);
                }
            }
            Span::Mismatched => {}
            Span::Open => break,
        }
    }
    Err(JsonExtractError {
        excerpt: excerpt(text),
    })
}

enum Span {
    /// End (exclusive) of the balanced span.
    Closed(usize),
    Mismatched,
    /// Text ended inside the span.
    Open,
}

fn scan(bytes: &[u8], start: usize) -> Span {
    let mut stack: Vec<u8> = Vec::new();
    let mut in_string = false;
    let mut escaped = false;
    for (i, &b) in bytes.iter().enumerate().skip(start) {
        if in_string {
            if escaped {
                escaped = false;
            } else if b == b'\\' {
                escaped = true;
            } else if b == b'"' {
                in_string = false;
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'{' => stack.push(b'}'),
            b'[' => stack.push(b']'),
            b'}' | b']' => {
                if stack.pop() != Some(b) {
                    return Span::Mismatched;
                }
                if stack.is_empty() {
                    return Span::Closed(i + 1);
                }
            }
            _ => {}
        }
    }
    Span::Open
}

fn excerpt(text: &str) -> String {
    const MAX: usize = 120;
    let trimmed = text.trim();
    if trimmed.chars().count() <= MAX {
        trimmed.to_string()
    } else {
        format!("{}...", trimmed.chars().take(MAX).collect::<String>())
    }
}
