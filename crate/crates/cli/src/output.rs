//! Table documents written as CSV or JSON.
//!
//! CSV: a `#` header block echoing the command, the effective configuration
//! and any summary values, then an RFC 4180 table. Numbers use 17
//! significant digits, which round-trip every `f64`; failed or undefined
//! cells are `NaN`, never zero. JSON: one object holding the same
//! configuration and summary plus the columns as arrays, with `null` in
//! place of `NaN`.

use std::io::Write;
use std::path::Path;

use serde_json::{Map, Value};

use crate::args::Format;
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Data {
    Num(Vec<f64>),
    Int(Vec<u64>),
    Text(Vec<String>),
}

impl Data {
    fn len(&self) -> usize {
        match self {
            Data::Num(v) => v.len(),
            Data::Int(v) => v.len(),
            Data::Text(v) => v.len(),
        }
    }

    fn cell(&self, row: usize) -> String {
        match self {
            Data::Num(v) => format_float(v[row]),
            Data::Int(v) => v[row].to_string(),
            Data::Text(v) => v[row].clone(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Data::Num(v) => Value::from(v.iter().map(|&x| json_float(x)).collect::<Vec<_>>()),
            Data::Int(v) => Value::from(v.clone()),
            Data::Text(v) => Value::from(v.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub data: Data,
}

impl Column {
    pub fn num(name: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            data: Data::Num(values),
        }
    }

    pub fn int(name: impl Into<String>, values: Vec<u64>) -> Self {
        Self {
            name: name.into(),
            data: Data::Int(values),
        }
    }

    pub fn text(name: impl Into<String>, values: Vec<String>) -> Self {
        Self {
            name: name.into(),
            data: Data::Text(values),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Document {
    pub command: &'static str,
    pub config: Map<String, Value>,
    pub summary: Map<String, Value>,
    pub columns: Vec<Column>,
}

pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:.16e}")
    }
}

pub fn json_float(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

fn header_value(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Number(n) => n
            .as_f64()
            .filter(|_| n.is_f64())
            .map_or_else(|| n.to_string(), format_float),
        other => other.to_string(),
    }
}

impl Document {
    pub fn new(command: &'static str, config: Map<String, Value>) -> Self {
        Self {
            command,
            config,
            summary: Map::new(),
            columns: Vec::new(),
        }
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, |c| c.data.len())
    }

    pub fn render(&self, format: Format) -> Result<Vec<u8>, CliError> {
        debug_assert!(self.columns.iter().all(|c| c.data.len() == self.rows()));
        match format {
            Format::Csv => self.render_csv(),
            Format::Json => self.render_json(),
        }
    }

    fn render_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut buf = Vec::new();
        let io = |e: std::io::Error| CliError::Numerical(format!("cannot format output: {e}"));
        writeln!(
            buf,
            "# twophoton {} {}",
            env!("CARGO_PKG_VERSION"),
            self.command
        )
        .map_err(io)?;
        for (k, v) in &self.config {
            writeln!(buf, "# config {k} = {}", header_value(v)).map_err(io)?;
        }
        for (k, v) in &self.summary {
            writeln!(buf, "# summary {k} = {}", header_value(v)).map_err(io)?;
        }
        let mut w = csv::Writer::from_writer(buf);
        let csv_err = |e: csv::Error| CliError::Numerical(format!("cannot format output: {e}"));
        w.write_record(self.columns.iter().map(|c| c.name.as_str()))
            .map_err(csv_err)?;
        for row in 0..self.rows() {
            w.write_record(self.columns.iter().map(|c| c.data.cell(row)))
                .map_err(csv_err)?;
        }
        w.into_inner()
            .map_err(|e| CliError::Numerical(format!("cannot format output: {e}")))
    }

    fn render_json(&self) -> Result<Vec<u8>, CliError> {
        let mut columns = Map::new();
        for c in &self.columns {
            columns.insert(c.name.clone(), c.data.to_json());
        }
        let mut doc = Map::new();
        doc.insert("program".into(), Value::from("twophoton"));
        doc.insert("version".into(), Value::from(env!("CARGO_PKG_VERSION")));
        doc.insert("command".into(), Value::from(self.command));
        doc.insert("config".into(), Value::Object(self.config.clone()));
        doc.insert("summary".into(), Value::Object(self.summary.clone()));
        doc.insert(
            "column_order".into(),
            Value::from(
                self.columns
                    .iter()
                    .map(|c| c.name.clone())
                    .collect::<Vec<_>>(),
            ),
        );
        doc.insert("columns".into(), Value::Object(columns));
        let mut out = serde_json::to_vec(&Value::Object(doc))
            .map_err(|e| CliError::Numerical(format!("cannot format output: {e}")))?;
        out.push(b'\n');
        Ok(out)
    }

    /// Writes to `path`, or standard output when `None`.
    pub fn emit(&self, format: Format, path: Option<&Path>) -> Result<(), CliError> {
        let bytes = self.render(format)?;
        let io = |e: std::io::Error| CliError::Numerical(format!("cannot write output: {e}"));
        match path {
            Some(p) => std::fs::write(p, bytes).map_err(io),
            None => {
                let mut out = std::io::stdout().lock();
                match out.write_all(&bytes).and_then(|_| out.flush()) {
                    // A closed reader (`| head`) is not an error.
                    Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                    other => other.map_err(io),
                }
            }
        }
    }
}
