//! CSV and JSON emission.
//!
//! Every CSV starts with a `# config_hash=<sha256>` comment row. Floats are
//! printed with 12 significant digits in the shortest of fixed or exponent
//! notation, and a non-finite value anywhere aborts the write.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{CliError, CliResult};

/// One CSV field.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Int(usize),
    Num(f64),
    Empty,
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Self::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Self::Text(s)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Self::Int(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Self::Num(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Self::Empty, Self::Num)
    }
}

/// Formats `v` like C's `%.12g`.
pub fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    // rounding to 12 digits may bump the exponent, so read it back from the
    // rounded scientific form
    let sci = format!("{v:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(&format!("{v:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim_zeros(mantissa), sign, exp.abs())
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// A table waiting to be written.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn extend(&mut self, other: Table) {
        debug_assert_eq!(self.columns, other.columns);
        self.rows.extend(other.rows);
    }

    fn check_finite(&self) -> CliResult<()> {
        for (r, row) in self.rows.iter().enumerate() {
            for (c, cell) in row.iter().enumerate() {
                if let Cell::Num(v) = cell {
                    if !v.is_finite() {
                        return Err(CliError::Numerical(format!(
                            "non-finite value {v} in column `{}` of row {}",
                            self.columns[c],
                            r + 1
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Renders the table, header comment included.
    pub fn render(&self, config_hash: &str) -> CliResult<String> {
        self.check_finite()?;
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        let fail = |e: csv::Error| CliError::Numerical(format!("csv encoding: {e}"));
        w.write_record(&self.columns).map_err(fail)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|c| match c {
                Cell::Text(s) => s.clone(),
                Cell::Int(v) => v.to_string(),
                Cell::Num(v) => fmt_num(*v),
                Cell::Empty => String::new(),
            }))
            .map_err(fail)?;
        }
        let body = w
            .into_inner()
            .map_err(|e| CliError::Numerical(format!("csv encoding: {e}")))?;
        let body = String::from_utf8(body).expect("csv output is utf-8");
        Ok(format!("# config_hash={config_hash}\n{body}"))
    }

    pub fn write(&self, path: &Path, config_hash: &str) -> CliResult<()> {
        let text = self.render(config_hash)?;
        write_file(path, &text)
    }
}

pub fn concentration_table() -> Table {
    Table::new(&["case", "method", "order", "alpha", "time", "size", "value"])
}

pub fn moment_table() -> Table {
    Table::new(&["case", "method", "time", "m0", "m1", "m2"])
}

pub fn eoc_table() -> Table {
    Table::new(&["case", "method", "cells", "error", "eoc"])
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Numerical(format!("json encoding: {e}")))?;
    write_file(path, &(text + "\n"))
}

pub fn write_file(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}
