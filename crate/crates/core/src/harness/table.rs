use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::format_f64;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    JsonLines,
}

impl Format {
    /// `.jsonl` and `.json` map to JSON lines, anything else to CSV.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") => Format::JsonLines,
            _ => Format::Csv,
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::JsonLines => "json-lines",
        })
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json-lines" | "jsonl" => Ok(Format::JsonLines),
            other => Err(Error::Config(format!("unknown output format `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Str(String),
    Int(i64),
    Float(f64),
    Bool(bool),
    Null,
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Str(s.to_string())
    }
}

impl From<String> for Value {
    fn from(s: String) -> Self {
        Value::Str(s)
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Float(v)
    }
}

impl From<usize> for Value {
    fn from(v: usize) -> Self {
        Value::Int(v as i64)
    }
}

impl From<u64> for Value {
    fn from(v: u64) -> Self {
        Value::Int(v as i64)
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Bool(v)
    }
}

impl<T: Into<Value>> From<Option<T>> for Value {
    fn from(v: Option<T>) -> Self {
        v.map_or(Value::Null, Into::into)
    }
}

impl Value {
    fn csv_text(&self) -> String {
        match self {
            Value::Str(s) => s.clone(),
            Value::Int(i) => i.to_string(),
            Value::Float(v) => format_f64(*v),
            Value::Bool(b) => b.to_string(),
            Value::Null => String::new(),
        }
    }

    fn json_text(&self) -> String {
        match self {
            Value::Str(s) => serde_json::to_string(s).expect("strings serialize"),
            Value::Int(i) => i.to_string(),
            Value::Float(v) if v.is_finite() => format_f64(*v),
            Value::Bool(b) => b.to_string(),
            Value::Float(_) | Value::Null => "null".into(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Float(v) => Some(*v),
            Value::Int(i) => Some(*i as f64),
            _ => None,
        }
    }
}

/// Rows under a fixed column order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header");
        self.rows.push(row);
    }

    /// The serialized text, LF-terminated, floats at 17 significant digits.
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => {
                let mut w = csv::WriterBuilder::new()
                    .terminator(csv::Terminator::Any(b'\n'))
                    .from_writer(Vec::new());
                w.write_record(&self.columns).expect("in-memory write");
                for row in &self.rows {
                    w.write_record(row.iter().map(Value::csv_text)).expect("in-memory write");
                }
                String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
            }
            Format::JsonLines => {
                let mut out = String::new();
                for row in &self.rows {
                    out.push('{');
                    for (i, (c, v)) in self.columns.iter().zip(row).enumerate() {
                        if i > 0 {
                            out.push(',');
                        }
                        out.push_str(&serde_json::to_string(c).expect("strings serialize"));
                        out.push(':');
                        out.push_str(&v.json_text());
                    }
                    out.push_str("}\n");
                }
                out
            }
        }
    }
}

/// Writes `table` to `path`, creating parent directories.
pub fn emit(table: &Table, format: Format, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, table.render(format)).map_err(|e| Error::io(path, e))
}

/// Reads back a CSV written by [`emit`]; every cell stays a string.
pub fn read_csv_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::Parse {
        location: path.display().to_string(),
        message: e.to_string(),
    })?;
    let header = r
        .headers()
        .map_err(|e| Error::Parse {
            location: path.display().to_string(),
            message: e.to_string(),
        })?
        .iter()
        .map(String::from)
        .collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::Parse {
            location: path.display().to_string(),
            message: e.to_string(),
        })?;
        rows.push(rec.iter().map(String::from).collect());
    }
    Ok((header, rows))
}
