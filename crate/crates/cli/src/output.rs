//! Report emission as JSON or CSV.

use std::io::Write;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::ValueEnum;
use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

pub struct Sink {
    pub out: Option<PathBuf>,
    pub format: Format,
}

impl Sink {
    /// Writes `report` to `--out` (printing `summary` to stdout) or, without
    /// `--out`, prints the report itself.
    pub fn emit<T: Serialize>(&self, report: &T, summary: &str) -> Result<()> {
        let text = match self.format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(report)?;
                s.push('\n');
                s
            }
            Format::Csv => to_csv(&serde_json::to_value(report)?)?,
        };
        self.write(&text, summary)
    }

    /// Same as [`Sink::emit`] with preformatted CSV.
    pub fn emit_with_csv<T: Serialize>(&self, report: &T, csv: String, summary: &str) -> Result<()> {
        match self.format {
            Format::Json => self.emit(report, summary),
            Format::Csv => self.write(&csv, summary),
        }
    }

    fn write(&self, text: &str, summary: &str) -> Result<()> {
        match &self.out {
            Some(p) => {
                std::fs::write(p, text).with_context(|| format!("out: cannot write {}", p.display()))?;
                if !summary.is_empty() {
                    println!("{summary}");
                }
            }
            None => {
                std::io::stdout().write_all(text.as_bytes())?;
            }
        }
        Ok(())
    }
}

/// Tabulates the report's `records` (or `rows`) array, or the report itself
/// as a single row. Nested values are written as JSON text.
fn to_csv(report: &Value) -> Result<String> {
    let rows: Vec<&Value> = match ["records", "rows"].iter().find_map(|k| report.get(k).and_then(Value::as_array)) {
        Some(a) => a.iter().collect(),
        None => vec![report],
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    let header: Vec<String> = match rows.first().and_then(|r| r.as_object()) {
        Some(o) => o.keys().cloned().collect(),
        None => vec!["value".into()],
    };
    w.write_record(&header)?;
    for r in rows {
        let cells: Vec<String> = match r.as_object() {
            Some(o) => header.iter().map(|k| cell(o.get(k).unwrap_or(&Value::Null))).collect(),
            None => vec![cell(r)],
        };
        w.write_record(&cells)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        Value::Bool(b) => b.to_string(),
        other => other.to_string(),
    }
}
