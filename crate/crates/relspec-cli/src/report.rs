//! Report rows and the CSV/JSON writers.
//!
//! The CSV schema is fixed per run: `run_id,command,status`, then one column
//! per echoed parameter (in config echo order), then one column per metric
//! (in first-seen order). Metrics print with 17 significant digits so a row
//! round-trips bit-exactly; JSON carries the same fields keyed by name.

use serde_json::{json, Map, Value};

/// Row status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    Degenerate,
    NoConverge,
}

impl Status {
    pub fn name(&self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Degenerate => "degenerate",
            Status::NoConverge => "no_converge",
        }
    }
}

/// One result row; parameters echo the full effective config.
#[derive(Debug, Clone)]
pub struct ReportRow {
    pub run_id: String,
    pub command: String,
    pub status: Status,
    pub params: Vec<(String, String)>,
    pub metrics: Vec<(String, f64)>,
}

/// 17 significant digits, enough to reproduce the f64 bit pattern.
pub fn fmt_metric(v: f64) -> String {
    format!("{v:.16e}")
}

/// Render rows as CSV with a single header row.
pub fn to_csv(rows: &[ReportRow]) -> String {
    let mut out = String::new();
    if rows.is_empty() {
        return out;
    }
    // the union of metric names across rows, first-seen order
    let mut metric_names: Vec<String> = Vec::new();
    for row in rows {
        for (name, _) in &row.metrics {
            if !metric_names.iter().any(|m| m == name) {
                metric_names.push(name.clone());
            }
        }
    }
    let param_names: Vec<String> = rows[0].params.iter().map(|(k, _)| k.clone()).collect();
    out.push_str("run_id,command,status");
    for p in &param_names {
        out.push(',');
        out.push_str(p);
    }
    for m in &metric_names {
        out.push(',');
        out.push_str(m);
    }
    out.push('\n');
    for row in rows {
        out.push_str(&row.run_id);
        out.push(',');
        out.push_str(&row.command);
        out.push(',');
        out.push_str(row.status.name());
        for name in &param_names {
            out.push(',');
            if let Some((_, v)) = row.params.iter().find(|(k, _)| k == name) {
                out.push_str(v);
            }
        }
        for name in &metric_names {
            out.push(',');
            if let Some((_, v)) = row.metrics.iter().find(|(k, _)| k == name) {
                out.push_str(&fmt_metric(*v));
            }
        }
        out.push('\n');
    }
    out
}

/// Render rows as a single JSON object with a `rows` array.
pub fn to_json(rows: &[ReportRow]) -> String {
    let rows: Vec<Value> = rows
        .iter()
        .map(|row| {
            let mut params = Map::new();
            for (k, v) in &row.params {
                params.insert(k.clone(), Value::String(v.clone()));
            }
            let mut metrics = Map::new();
            for (k, v) in &row.metrics {
                metrics.insert(k.clone(), json!(v));
            }
            json!({
                "run_id": row.run_id,
                "command": row.command,
                "status": row.status.name(),
                "params": Value::Object(params),
                "metrics": Value::Object(metrics),
            })
        })
        .collect();
    let doc = json!({ "rows": rows });
    serde_json::to_string_pretty(&doc).expect("json serialization") + "\n"
}
