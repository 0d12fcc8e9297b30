use std::fs;
use std::io::Write;
use std::path::Path;

use serde_json::Value;

use crate::args::Format;
use crate::failure::{CliError, CliResult};

/// A rendered result: a JSON document or a CSV table.
#[derive(Debug, Clone, PartialEq)]
pub enum Artifact {
    Json(Value),
    Table { header: Vec<String>, rows: Vec<Vec<Cell>> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }
}

fn cell_text(c: &Cell) -> String {
    match c {
        Cell::Num(v) => format!("{v:e}"),
        Cell::Text(s) => s.clone(),
        Cell::Empty => String::new(),
    }
}

fn cell_json(c: &Cell) -> Value {
    match c {
        Cell::Num(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
        Cell::Text(s) => Value::String(s.clone()),
        Cell::Empty => Value::Null,
    }
}

impl Artifact {
    pub fn table(header: &[&str], rows: Vec<Vec<Cell>>) -> Self {
        Artifact::Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows,
        }
    }

    /// CSV for tables and pretty JSON for documents; a table rendered as
    /// JSON becomes an array of row objects.
    pub fn render(&self, as_json: bool) -> CliResult<String> {
        match self {
            Artifact::Json(v) => Ok(pretty(v)),
            Artifact::Table { header, rows } if as_json => {
                let arr: Vec<Value> = rows
                    .iter()
                    .map(|r| Value::Object(header.iter().cloned().zip(r.iter().map(cell_json)).collect()))
                    .collect();
                Ok(pretty(&Value::Array(arr)))
            }
            Artifact::Table { header, rows } => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(header).map_err(internal)?;
                for r in rows {
                    w.write_record(r.iter().map(cell_text)).map_err(internal)?;
                }
                let bytes = w.into_inner().map_err(|e| CliError::Internal(e.to_string()))?;
                String::from_utf8(bytes).map_err(internal)
            }
        }
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn internal<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Internal(e.to_string())
}

pub fn emit(text: &str, path: Option<&Path>) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Internal(format!("writing {}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(internal)?;
            out.flush().map_err(internal)
        }
    }
}

/// Renders and emits; without an explicit format single results become
/// JSON and grids CSV. Returns the emitted text.
pub fn finish(artifact: Artifact, format: Option<Format>, single: bool, path: Option<&Path>) -> CliResult<String> {
    let as_json = match format {
        Some(f) => f == Format::Json,
        None => single || matches!(artifact, Artifact::Json(_)),
    };
    let text = artifact.render(as_json)?;
    emit(&text, path)?;
    Ok(text)
}

pub fn finish_table(header: &[&str], rows: Vec<Vec<Cell>>, format: Option<Format>, path: Option<&Path>) -> CliResult<String> {
    finish(Artifact::table(header, rows), format, false, path)
}
