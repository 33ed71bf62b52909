use std::io::Write;

use anyhow::Result;
use delzant_core::report::{round12, round_value};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// A command result: JSON document plus the same content as a table.
pub struct Output {
    pub pass: bool,
    pub json: Value,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

pub enum Cell {
    Num(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Text(b.to_string())
    }
}

pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        serde_json::to_string(&round12(x)).unwrap_or_else(|_| x.to_string())
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => format_number(*x),
            Cell::Text(s) => s.clone(),
        }
    }
}

pub fn write(out: &Output, format: Format, sink: &mut dyn Write) -> Result<()> {
    match format {
        Format::Json => {
            let mut v = out.json.clone();
            round_value(&mut v);
            serde_json::to_writer_pretty(&mut *sink, &v)?;
            writeln!(sink)?;
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(sink);
            w.write_record(&out.headers)?;
            for row in &out.rows {
                w.write_record(row.iter().map(Cell::render))?;
            }
            w.flush()?;
        }
    }
    Ok(())
}
