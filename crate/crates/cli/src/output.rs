use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;

/// Column-major numeric table written as CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn new() -> Self {
        Self {
            header: Vec::new(),
            columns: Vec::new(),
        }
    }

    pub fn push(&mut self, name: impl Into<String>, values: Vec<f64>) -> &mut Self {
        if let Some(first) = self.columns.first() {
            assert_eq!(first.len(), values.len(), "column length mismatch");
        }
        self.header.push(name.into());
        self.columns.push(values);
        self
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.header
            .iter()
            .position(|h| h == name)
            .map(|i| self.columns[i].as_slice())
    }

    pub fn render(&self, config_sha256: &str) -> String {
        let mut out = String::with_capacity(self.rows() * self.columns.len() * 22 + 128);
        writeln!(out, "# config_sha256={config_sha256}").unwrap();
        out.push_str(&self.header.join(","));
        out.push('\n');
        for r in 0..self.rows() {
            for (j, col) in self.columns.iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                write!(out, "{}", Num(col[r])).unwrap();
            }
            out.push('\n');
        }
        out
    }
}

impl Default for Table {
    fn default() -> Self {
        Self::new()
    }
}

/// 15 significant digits in scientific notation.
pub struct Num(pub f64);

impl std::fmt::Display for Num {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.0 == 0.0 {
            // keeps -0.0 and 0.0 byte-identical
            f.write_str("0.00000000000000e0")
        } else {
            write!(f, "{:.14e}", self.0)
        }
    }
}

pub fn write_csv(path: &Path, table: &Table, config_sha256: &str) -> io::Result<()> {
    fs::write(path, table.render(config_sha256))
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    text.push('\n');
    fs::write(path, text)
}

/// Parses a CSV written by [`write_csv`] back into (hash, header, rows).
pub fn read_csv(text: &str) -> Option<(String, Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines();
    let hash = lines.next()?.strip_prefix("# config_sha256=")?.to_string();
    let header = lines.next()?.split(',').map(str::to_string).collect();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse().ok()).collect::<Option<Vec<f64>>>())
        .collect::<Option<_>>()?;
    Some((hash, header, rows))
}
