//! JSON envelopes and plain-text rendering.

use serde_json::{Map, Value};

pub const SCHEMA: u64 = 1;

/// Replaces every JSON number with its decimal string.
pub fn stringify_numbers(v: Value) -> Value {
    match v {
        Value::Number(n) => Value::String(n.to_string()),
        Value::Array(items) => Value::Array(items.into_iter().map(stringify_numbers).collect()),
        Value::Object(map) => Value::Object(
            map.into_iter()
                .map(|(k, v)| (k, stringify_numbers(v)))
                .collect(),
        ),
        other => other,
    }
}

/// `{schema, command, passed, ...body}` with numbers turned into strings.
pub fn envelope(command: &str, passed: bool, body: Value) -> Value {
    let mut out = Map::new();
    out.insert("schema".into(), Value::from(SCHEMA));
    out.insert("command".into(), Value::from(command));
    out.insert("passed".into(), Value::from(passed));
    match stringify_numbers(body) {
        Value::Object(fields) => out.extend(fields),
        other => {
            out.insert("result".into(), other);
        }
    }
    Value::Object(out)
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some("-".into()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        _ => None,
    }
}

fn render_into(out: &mut String, key: &str, v: &Value, indent: usize) {
    let pad = "  ".repeat(indent);
    if let Some(s) = scalar(v) {
        out.push_str(&format!("{pad}{key}: {s}\n"));
        return;
    }
    match v {
        Value::Array(items) if items.iter().all(|x| scalar(x).is_some()) => {
            let parts: Vec<String> = items.iter().filter_map(scalar).collect();
            out.push_str(&format!("{pad}{key}: [{}]\n", parts.join(", ")));
        }
        Value::Array(items)
            if items.iter().all(|x| {
                x.as_array()
                    .is_some_and(|a| a.iter().all(|y| scalar(y).is_some()))
            }) =>
        {
            let parts: Vec<String> = items
                .iter()
                .map(|x| {
                    format!(
                        "({})",
                        x.as_array()
                            .unwrap()
                            .iter()
                            .filter_map(scalar)
                            .collect::<Vec<_>>()
                            .join(", ")
                    )
                })
                .collect();
            out.push_str(&format!("{pad}{key}: {}\n", parts.join(" ")));
        }
        Value::Array(items) => {
            out.push_str(&format!("{pad}{key}:\n"));
            for (i, item) in items.iter().enumerate() {
                render_into(out, &format!("[{i}]"), item, indent + 1);
            }
        }
        Value::Object(map) => {
            out.push_str(&format!("{pad}{key}:\n"));
            for (k, item) in map {
                render_into(out, k, item, indent + 1);
            }
        }
        _ => unreachable!(),
    }
}

/// Indented `key: value` lines for a JSON object.
pub fn render_text(v: &Value) -> String {
    let mut out = String::new();
    match v {
        Value::Object(map) => {
            for (k, item) in map {
                if k == "schema" {
                    continue;
                }
                render_into(&mut out, k, item, 0);
            }
        }
        other => render_into(&mut out, "result", other, 0),
    }
    out
}
