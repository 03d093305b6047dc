//! Tabular datasets and their CSV / JSON encodings.
//!
//! Numbers are rounded to 12 significant digits. A CSV file starts with
//! `#` lines carrying the tool version, the subcommand, the resolved
//! configuration as JSON and an optional summary.

use std::io::Write;

use serde_json::{json, Value as Json};

use crate::config::{Format, RunConfig};
use crate::error::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Num(v)
    }
}

impl From<usize> for Value {
    fn from(v: usize) -> Self {
        Value::Int(v as i64)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Text(v.to_string())
    }
}

impl From<String> for Value {
    fn from(v: String) -> Self {
        Value::Text(v)
    }
}

/// Rounds to 12 significant digits.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let r = round12(x);
    let a = r.abs();
    if r == 0.0 {
        "0".into()
    } else if (1e-4..1e15).contains(&a) {
        format!("{r}")
    } else {
        format!("{r:e}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub command: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    pub summary: Option<String>,
}

impl Dataset {
    pub fn new(command: &str, columns: &[&str]) -> Self {
        Self {
            command: command.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            summary: None,
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn write(&self, config: &RunConfig, format: Format, out: &mut dyn Write) -> Result<(), CliError> {
        match format {
            Format::Csv => self.write_csv(config, out),
            Format::Json => self.write_json(config, out),
        }
    }

    fn write_csv(&self, config: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
        writeln!(out, "# mntc {VERSION} {}", self.command)?;
        writeln!(out, "# config: {}", config.to_json())?;
        if let Some(s) = &self.summary {
            writeln!(out, "# summary: {s}")?;
        }
        writeln!(out, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|v| match v {
                    Value::Num(x) => format_number(*x),
                    Value::Int(i) => i.to_string(),
                    Value::Text(s) => s.clone(),
                })
                .collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }

    fn write_json(&self, config: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
        let rows: Vec<Json> = self
            .rows
            .iter()
            .map(|row| {
                Json::Array(
                    row.iter()
                        .map(|v| match v {
                            Value::Num(x) if x.is_finite() => json!(round12(*x)),
                            Value::Num(_) => Json::Null,
                            Value::Int(i) => json!(i),
                            Value::Text(s) => json!(s),
                        })
                        .collect(),
                )
            })
            .collect();
        let doc = json!({
            "tool": "mntc",
            "version": VERSION,
            "command": self.command,
            "config": serde_json::to_value(config).expect("configuration serialises"),
            "summary": self.summary,
            "columns": self.columns,
            "rows": rows,
        });
        serde_json::to_writer_pretty(&mut *out, &doc).map_err(|e| CliError::Io(e.into()))?;
        writeln!(out)?;
        Ok(())
    }
}

/// Recovers the configuration embedded in a CSV header.
pub fn config_from_header(text: &str) -> Result<RunConfig, CliError> {
    let line = text
        .lines()
        .take_while(|l| l.starts_with('#'))
        .find_map(|l| l.strip_prefix("# config: "))
        .ok_or_else(|| CliError::Config("no configuration line in header".into()))?;
    RunConfig::from_json(line)
}
