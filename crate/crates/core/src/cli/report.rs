//! Plain-text rendering of the JSON and CSV artifacts. No computation.

use std::fmt::Write as _;

use serde_json::Value;

use crate::error::{Error, Result};
use crate::scenario::json::from_json_text;

fn table(header: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: &[String], out: &mut String| {
        let parts: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, &w)| {
                if c.parse::<f64>().is_ok() {
                    format!("{c:>w$}")
                } else {
                    format!("{c:<w$}")
                }
            })
            .collect();
        out.push_str(parts.join("  ").trim_end());
        out.push('\n');
    };
    let mut out = String::new();
    line(header, &mut out);
    let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
    line(&rule, &mut out);
    for r in rows {
        line(r, &mut out);
    }
    out
}

fn csv_table(text: &str) -> Result<String> {
    let parse_err = |e: csv::Error| Error::Parse {
        offset: e.position().map_or(0, |p| p.byte()),
        message: e.to_string(),
    };
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = rd
        .headers()
        .map_err(parse_err)?
        .iter()
        .map(str::to_owned)
        .collect();
    let mut rows = Vec::new();
    for rec in rd.records() {
        rows.push(rec.map_err(parse_err)?.iter().map(str::to_owned).collect());
    }
    Ok(table(&header, &rows))
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

/// Returns the rendered text and the number of failed checks.
fn json_summary(v: &Value) -> (String, usize) {
    let is_check = |e: &Value| e.get("passed").is_some() && e.get("lhs").is_some();
    match v {
        Value::Array(items) if !items.is_empty() && items.iter().all(is_check) => {
            let header: Vec<String> = ["passed", "lhs", "rhs", "slack", "context"]
                .iter()
                .map(|s| s.to_string())
                .collect();
            let rows: Vec<Vec<String>> = items
                .iter()
                .map(|e| header.iter().map(|k| cell(&e[k.as_str()])).collect())
                .collect();
            let failed = items
                .iter()
                .filter(|e| e["passed"] != Value::Bool(true))
                .count();
            let mut out = table(&header, &rows);
            if failed > 0 {
                let _ = writeln!(out, "{failed} FAILED");
            } else {
                let _ = writeln!(out, "all {} checks passed", items.len());
            }
            (out, failed)
        }
        Value::Object(m) if m.contains_key("value") && m.contains_key("method") => {
            let mut out = String::new();
            for k in ["value", "method", "seed", "elapsed_ms"] {
                let _ = writeln!(out, "{k:<11} {}", cell(&m[k]));
            }
            if let Some(Value::Object(c)) = m.get("certificate") {
                for (k, v) in c {
                    if !v.is_object() && !v.is_array() {
                        let _ = writeln!(out, "{k:<11} {}", cell(v));
                    }
                }
            }
            (out, 0)
        }
        Value::Object(m) if m.contains_key("coeffs") || m.contains_key("weights") => {
            let what = if m.contains_key("coeffs") {
                "functional"
            } else {
                "game"
            };
            let mut out = format!(
                "{what}: N={} Nprime={} K={}",
                cell(&m["N"]),
                cell(&m["Nprime"]),
                cell(&m["K"])
            );
            if let Some(kp) = m.get("Kprime") {
                let _ = write!(out, " Kprime={}", cell(kp));
            }
            out.push('\n');
            if let Some(Value::Object(meta)) = m.get("metadata") {
                let parts: Vec<String> = meta
                    .iter()
                    .map(|(k, v)| format!("{k}={}", cell(v)))
                    .collect();
                let _ = writeln!(out, "metadata: {}", parts.join(" "));
            }
            (out, 0)
        }
        Value::Object(m) if m.contains_key("dimA") => (
            format!(
                "strategy: dimA={} dimB={}\n",
                cell(&m["dimA"]),
                cell(&m["dimB"])
            ),
            0,
        ),
        Value::Object(m) => (
            format!(
                "keys: {}\n",
                m.keys().cloned().collect::<Vec<_>>().join(", ")
            ),
            0,
        ),
        other => (format!("{other}\n"), 0),
    }
}

fn looks_like_json(name: &str, text: &str) -> bool {
    if name.ends_with(".csv") {
        return false;
    }
    name.ends_with(".json") || text.trim_start().starts_with(['{', '['])
}

/// Render each `(name, text)` artifact; a failed check anywhere makes the
/// second component nonzero.
pub fn render_report(artifacts: &[(String, String)]) -> Result<(String, usize)> {
    if artifacts.is_empty() {
        return Err(Error::Usage("report needs at least one artifact".into()));
    }
    let mut out = String::new();
    let mut failed = 0;
    for (name, text) in artifacts {
        let _ = writeln!(out, "== {name} ==");
        let body = if looks_like_json(name, text) {
            let v: Value = from_json_text(text)?;
            let (body, f) = json_summary(&v);
            failed += f;
            body
        } else {
            csv_table(text)?
        };
        out.push_str(&body);
    }
    Ok((out, failed))
}
