//! Report serialization. Machine formats carry every float at 17 significant
//! digits; the table format is for people.

use std::io::Write;
use std::path::Path;

use clap::ValueEnum;
use mnar_drm::data::format_f64;
use serde::Serialize;
use serde_json::{Map, Number, Value};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Table,
}

/// Rewrite every floating-point number to the fixed 17-digit form.
pub fn canonical(value: Value) -> Value {
    match value {
        Value::Number(n) if n.is_f64() => {
            let v = n.as_f64().unwrap_or(f64::NAN);
            format_f64(v).parse::<Number>().map(Value::Number).unwrap_or(Value::Null)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(canonical).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, canonical(v))).collect()),
        other => other,
    }
}

pub fn to_json<T: Serialize>(report: &T) -> serde_json::Result<Value> {
    Ok(canonical(serde_json::to_value(report)?))
}

fn scalar(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Dotted-path flattening: `{"a": {"b": [1, 2]}}` becomes `a.b.0`, `a.b.1`.
pub fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(o) => o.iter().for_each(|(k, v)| flatten(&key(k), v, out)),
        Value::Array(a) => a.iter().enumerate().for_each(|(i, v)| flatten(&key(&i.to_string()), v, out)),
        other => out.push((prefix.to_string(), scalar(other))),
    }
}

/// Long `field,value` CSV of a whole report.
pub fn long_csv(v: &Value) -> String {
    let mut rows = Vec::new();
    flatten("", v, &mut rows);
    let mut s = String::from("field,value\n");
    for (k, val) in rows {
        s.push_str(&format!("{},{}\n", csv_field(&k), csv_field(&val)));
    }
    s
}

/// Wide CSV: one row per record, columns from the first record's flattened keys.
pub fn wide_csv(records: &[Value], extra: &Map<String, Value>) -> String {
    let flat: Vec<Vec<(String, String)>> = records
        .iter()
        .map(|r| {
            let mut row = Vec::new();
            flatten("", r, &mut row);
            for (k, v) in extra {
                flatten(k, v, &mut row);
            }
            row
        })
        .collect();
    let Some(first) = flat.first() else {
        return String::new();
    };
    let mut s = first.iter().map(|(k, _)| csv_field(k)).collect::<Vec<_>>().join(",");
    s.push('\n');
    for row in &flat {
        s.push_str(&row.iter().map(|(_, v)| csv_field(v)).collect::<Vec<_>>().join(","));
        s.push('\n');
    }
    s
}

pub fn emit(text: &str, out: Option<&Path>) -> std::io::Result<()> {
    match out {
        Some(p) => std::fs::write(p, text),
        None => {
            // one locked write keeps concurrent output from interleaving
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(text.as_bytes())?;
            lock.flush()
        }
    }
}

pub fn fmt_opt(v: Option<f64>, width: usize) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x:>width$.6}"),
        _ => format!("{:>width$}", "-"),
    }
}
