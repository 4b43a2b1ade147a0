//! Canonical JSON text: sorted object keys, shortest round-trip numbers, LF endings.

use serde::Serialize;
use serde_json::{Map, Value};

/// Rebuilds every object with its keys in lexicographic order.
pub fn sort_keys(value: Value) -> Value {
    match value {
        Value::Object(map) => {
            let mut entries: Vec<(String, Value)> = map.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            Value::Object(
                entries
                    .into_iter()
                    .map(|(k, v)| (k, sort_keys(v)))
                    .collect::<Map<String, Value>>(),
            )
        }
        Value::Array(items) => Value::Array(items.into_iter().map(sort_keys).collect()),
        other => other,
    }
}

/// Indented canonical document with a trailing newline.
pub fn to_document<T: Serialize + ?Sized>(value: &T) -> String {
    let value = sort_keys(serde_json::to_value(value).expect("in-memory values serialize"));
    let mut text = serde_json::to_string_pretty(&value).expect("JSON values serialize");
    text.push('\n');
    text
}

/// Single-line canonical form, without a trailing newline.
pub fn to_line<T: Serialize + ?Sized>(value: &T) -> String {
    let value = sort_keys(serde_json::to_value(value).expect("in-memory values serialize"));
    serde_json::to_string(&value).expect("JSON values serialize")
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn keys_sorted_recursively() {
        let v = json!({"b": 1, "a": [{"z": 0.5, "y": -0.0}]});
        assert_eq!(to_line(&v), r#"{"a":[{"y":-0.0,"z":0.5}],"b":1}"#);
        assert!(to_document(&v).ends_with("}\n"));
        assert!(!to_document(&v).contains('\r'));
    }
}
