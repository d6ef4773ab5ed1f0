pub mod detect;
pub mod oracle;
pub mod register;
pub mod simulate;
pub mod sweep;

use std::fmt::Write as _;

/// JSON array of a vector's components.
pub(crate) fn array<'a>(values: impl IntoIterator<Item = &'a f64>) -> serde_json::Value {
    serde_json::Value::Array(values.into_iter().map(|v| serde_json::json!(v)).collect())
}

pub(crate) fn jsonl(records: &[serde_json::Value]) -> String {
    let mut out = String::new();
    for r in records {
        let _ = writeln!(out, "{r}");
    }
    out
}
