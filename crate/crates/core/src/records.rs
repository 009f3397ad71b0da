//! JSON-lines helpers shared by the record formats.

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

/// One compact JSON object per line, each line terminated.
pub fn write_jsonl<T: Serialize>(items: &[T]) -> Result<String> {
    let mut out = String::new();
    for item in items {
        let line = serde_json::to_string(item).map_err(|e| Error::Record(e.to_string()))?;
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out)
}

/// Strict reader: blank lines are ignored, any malformed line is an error.
pub fn read_jsonl<T: DeserializeOwned>(text: &str) -> Result<Vec<T>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Record(format!("line {}: {e}", i + 1)))
        })
        .collect()
}
