//! Output rendering: aligned key-value tables, CSV rows, and the JSON
//! envelope that embeds the resolved run configuration in every report.

use serde::Serialize;
use serde_json::Value;

pub fn kv_table(rows: &[(&str, String)]) -> String {
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    let mut out = String::new();
    for (k, v) in rows {
        out.push_str(&format!("{k:<width$}  {v}\n"));
    }
    out
}

/// Left-aligned column listing for human output.
pub fn columns_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let mut out = String::new();
    let render_row = |cells: Vec<String>| -> String {
        let mut line = String::new();
        for (i, cell) in cells.iter().enumerate() {
            line.push_str(&format!("{cell:<width$}", width = widths[i]));
            if i + 1 < cells.len() {
                line.push_str("  ");
            }
        }
        line.trim_end().to_string() + "\n"
    };
    out.push_str(&render_row(header.iter().map(|h| h.to_string()).collect()));
    for row in rows {
        out.push_str(&render_row(row.clone()));
    }
    out
}

pub fn csv_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// `{ "config": ..., <body fields> }` pretty-printed with a trailing newline.
pub fn json_envelope<C: Serialize>(config: &C, body: Value) -> String {
    let mut map = serde_json::Map::new();
    map.insert(
        "config".to_string(),
        serde_json::to_value(config).expect("config serializes"),
    );
    if let Value::Object(fields) = body {
        for (k, v) in fields {
            map.insert(k, v);
        }
    }
    let mut text =
        serde_json::to_string_pretty(&Value::Object(map)).expect("report serializes");
    text.push('\n');
    text
}

pub fn to_body<T: Serialize>(key: &str, value: &T) -> Value {
    let mut map = serde_json::Map::new();
    map.insert(
        key.to_string(),
        serde_json::to_value(value).expect("body serializes"),
    );
    Value::Object(map)
}

pub fn merge_bodies(parts: Vec<Value>) -> Value {
    let mut map = serde_json::Map::new();
    for part in parts {
        if let Value::Object(fields) = part {
            for (k, v) in fields {
                map.insert(k, v);
            }
        }
    }
    Value::Object(map)
}
