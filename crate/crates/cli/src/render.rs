//! Tabular output shared by every subcommand.
//!
//! Numbers are rounded to 9 significant digits once, when they enter the
//! table, so the CSV and JSON renderings carry the same values.

use std::io::Write;

use serde::Serialize;
use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(Option<f64>),
    Int(u64),
    Text(String),
    Bool(bool),
}

impl Cell {
    /// Non-finite values become nulls.
    pub fn num(v: f64) -> Self {
        Cell::Num(v.is_finite().then(|| round_sig(v)))
    }

    pub fn opt(v: Option<f64>) -> Self {
        v.map_or(Cell::Num(None), Cell::num)
    }

    fn csv_field(&self) -> String {
        match self {
            Cell::Num(Some(v)) => v.to_string(),
            Cell::Num(None) => String::new(),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(Some(v)) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
            Cell::Num(None) => Value::Null,
            Cell::Int(v) => Value::from(*v),
            Cell::Text(s) => Value::from(s.as_str()),
            Cell::Bool(b) => Value::from(*b),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::num(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

/// Rounds to 9 significant digits. Rust's `Display` for the result is the
/// shortest decimal that parses back to the same value.
pub fn round_sig(v: f64) -> f64 {
    if v == 0.0 {
        return 0.0;
    }
    format!("{v:.8e}").parse().unwrap_or(v)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub diagnostics: Map<String, Value>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
            diagnostics: Map::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn note(&mut self, key: &str, value: impl Into<Value>) {
        self.diagnostics.insert(key.to_string(), value.into());
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv_field))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self, spec: Value) -> Value {
        let results = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> = self
                    .columns
                    .iter()
                    .zip(row)
                    .map(|(k, c)| (k.to_string(), c.json()))
                    .collect();
                Value::Object(obj)
            })
            .collect();
        serde_json::json!({
            "spec": spec,
            "results": Value::Array(results),
            "diagnostics": Value::Object(self.diagnostics.clone()),
        })
    }

    pub fn write<W: Write>(&self, format: Format, spec: Value, mut out: W) -> std::io::Result<()> {
        match format {
            Format::Csv => self.write_csv(out).map_err(std::io::Error::other),
            Format::Json => {
                serde_json::to_writer_pretty(&mut out, &self.to_json(spec))?;
                writeln!(out)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(round_sig(1.0 / 3.0), 0.333333333);
        assert_eq!(round_sig(-2.0 / 3.0), -0.666666667);
        assert_eq!(round_sig(123456.789012), 123456.789);
        assert_eq!(round_sig(1.234567891234e-13), 1.23456789e-13);
        assert_eq!(round_sig(0.25), 0.25);
        assert_eq!(round_sig(0.0), 0.0);
    }

    #[test]
    fn non_finite_is_null() {
        assert_eq!(Cell::num(f64::NAN), Cell::Num(None));
        assert_eq!(Cell::num(f64::INFINITY).json(), Value::Null);
    }

    #[test]
    fn csv_and_json_agree() {
        let mut t = Table::new(vec!["a", "b", "ok"]);
        t.push(vec![Cell::num(0.1 + 0.2), Cell::Num(None), true.into()]);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "a,b,ok\n0.3,,true\n");
        let j = t.to_json(Value::Null);
        assert_eq!(j["results"][0]["a"].as_f64(), Some(0.3));
        assert!(j["results"][0]["b"].is_null());
    }
}
