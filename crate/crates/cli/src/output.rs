//! Deterministic file writers: CSV tables with 17 significant digits and
//! pretty-printed JSON.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

/// One CSV cell.
pub enum Cell {
    /// Floating-point value, printed with 17 significant digits.
    F(f64),
    /// Integer.
    I(i64),
    /// Boolean, printed as `true`/`false`.
    B(bool),
    /// Verbatim text (must not contain commas or newlines).
    S(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::I(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::B(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::S(v.to_string())
    }
}

/// `v` with 17 significant digits, enough to round-trip every `f64`.
pub fn fmt17(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

/// An in-memory CSV table with a fixed header.
pub struct Table {
    columns: usize,
    text: String,
}

impl Table {
    /// Starts a table with the given header.
    pub fn new(header: &[&str]) -> Self {
        Self { columns: header.len(), text: format!("{}\n", header.join(",")) }
    }

    /// Appends one row; the number of cells must match the header.
    pub fn row(&mut self, cells: Vec<Cell>) {
        assert_eq!(cells.len(), self.columns, "row width differs from header");
        let mut first = true;
        for c in cells {
            if !first {
                self.text.push(',');
            }
            first = false;
            match c {
                Cell::F(v) => self.text.push_str(&fmt17(v)),
                Cell::I(v) => {
                    let _ = write!(self.text, "{v}");
                }
                Cell::B(v) => self.text.push_str(if v { "true" } else { "false" }),
                Cell::S(s) => self.text.push_str(&s),
            }
        }
        self.text.push('\n');
    }

    /// Writes the table to `dir/name`.
    pub fn write(&self, dir: &Path, name: &str) -> Result<PathBuf> {
        write_text(dir, name, &self.text)
    }
}

/// Writes `value` as pretty JSON to `dir/name`.
pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf> {
    let mut text = serde_json::to_string_pretty(value).context("serializing JSON")?;
    text.push('\n');
    write_text(dir, name, &text)
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            let s = fmt17(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
            let mantissa = s.split('e').next().unwrap().trim_start_matches('-');
            assert_eq!(mantissa.chars().filter(|c| c.is_ascii_digit()).count(), 17);
        }
    }

    #[test]
    fn table_rows_follow_header() {
        let mut t = Table::new(&["k", "x", "ok"]);
        t.row(vec![3usize.into(), 0.5.into(), true.into()]);
        assert_eq!(t.text, "k,x,ok\n3,5.0000000000000000e-1,true\n");
    }
}
