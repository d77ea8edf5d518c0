//! One run's result, written as CSV (header row then data rows) or as a single
//! JSON object with `inputs`, `outputs` and `diagnostics`.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

/// Directory used for relative `--output` paths when set.
pub const OUTPUT_DIR_ENV: &str = "BOXPART_OUTPUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Default)]
pub struct Report {
    inputs: Map<String, Value>,
    columns: Vec<String>,
    rows: Vec<Vec<Value>>,
    diagnostics: Map<String, Value>,
}

impl Report {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            ..Self::default()
        }
    }

    pub fn with_columns(columns: Vec<String>) -> Self {
        Self {
            columns,
            ..Self::default()
        }
    }

    pub fn input(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.inputs.insert(key.to_string(), value.into());
        self
    }

    pub fn diagnostic(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.diagnostics.insert(key.to_string(), value.into());
        self
    }

    pub fn row(&mut self, values: Vec<Value>) {
        debug_assert_eq!(values.len(), self.columns.len());
        self.rows.push(values);
    }

    pub fn to_json(&self) -> Value {
        let outputs: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let obj: Map<String, Value> = self
                    .columns
                    .iter()
                    .cloned()
                    .zip(r.iter().cloned())
                    .collect();
                Value::Object(obj)
            })
            .collect();
        let mut top = Map::new();
        top.insert("inputs".into(), Value::Object(self.inputs.clone()));
        top.insert("outputs".into(), Value::Array(outputs));
        top.insert(
            "diagnostics".into(),
            Value::Object(self.diagnostics.clone()),
        );
        Value::Object(top)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r.iter().map(cell))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn render(&self, format: Format) -> Vec<u8> {
        match format {
            Format::Csv => {
                let mut buf = Vec::new();
                self.write_csv(&mut buf).expect("writing to memory");
                buf
            }
            Format::Json => {
                let mut buf = serde_json::to_vec_pretty(&self.to_json()).expect("serialising json");
                buf.push(b'\n');
                buf
            }
        }
    }

    /// Diagnostics as `# key = value` lines, for CSV runs where they have no column.
    pub fn diagnostic_lines(&self) -> impl Iterator<Item = String> + '_ {
        self.diagnostics
            .iter()
            .map(|(k, v)| format!("# {k} = {}", cell(v)))
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

/// Finite floats as numbers; NaN and infinities as strings so JSON stays valid.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x)
        .map(Value::Number)
        .unwrap_or_else(|| Value::String(format!("{x}")))
}

pub fn resolve_output(path: &Path) -> PathBuf {
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(dir) if path.is_relative() => Path::new(&dir).join(path),
        _ => path.to_path_buf(),
    }
}
