use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use serde::Serialize;
use serde_json::{Map, Value};

pub const SCHEMA: u64 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// A rendered report: the JSON body and, where the command defines one, a table.
pub struct Report {
    body: Value,
    table: Option<(Vec<&'static str>, Vec<Vec<String>>)>,
}

impl Report {
    pub fn new<T: Serialize>(body: &T) -> Result<Self> {
        Ok(Report { body: serde_json::to_value(body)?, table: None })
    }

    pub fn with_table(mut self, header: Vec<&'static str>, rows: Vec<Vec<String>>) -> Self {
        self.table = Some((header, rows));
        self
    }

    pub fn render(&self, format: Format) -> Result<Vec<u8>> {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&envelope(self.body.clone()))?;
                s.push('\n');
                Ok(s.into_bytes())
            }
            Format::Csv => {
                let Some((header, rows)) = &self.table else {
                    bail!("this command has no CSV form; use --format json");
                };
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(header)?;
                for r in rows {
                    w.write_record(r)?;
                }
                Ok(w.into_inner()?)
            }
        }
    }
}

/// `{"schema": 1, ...body}`; non-object bodies go under `"result"`.
pub fn envelope(body: Value) -> Value {
    let mut out = Map::new();
    out.insert("schema".into(), Value::from(SCHEMA));
    match body {
        Value::Object(m) => out.extend(m),
        other => {
            out.insert("result".into(), other);
        }
    }
    Value::Object(out)
}

/// Shortest round-trip form, so tables match the JSON numbers.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:?}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn emit(bytes: &[u8], path: Option<&PathBuf>) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, bytes).with_context(|| format!("cannot write {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_carries_schema() {
        let v = envelope(serde_json::json!({"value": 2.0}));
        assert_eq!(v, serde_json::json!({"schema": 1, "value": 2.0}));
        assert_eq!(envelope(Value::from(3))["result"], 3);
    }

    #[test]
    fn csv_needs_a_table() {
        let r = Report::new(&serde_json::json!({"a": 1})).unwrap();
        assert!(r.render(Format::Csv).is_err());
        let r = r.with_table(vec!["x", "value"], vec![vec![num(0.5), num(f64::INFINITY)]]);
        assert_eq!(String::from_utf8(r.render(Format::Csv).unwrap()).unwrap(), "x,value\n0.5,inf\n");
    }
}
