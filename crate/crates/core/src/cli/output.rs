//! Check rows, CSV tables and the run manifest.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;

/// Shortest decimal that reads back to the same double.
pub fn fmt_num(x: f64) -> String {
    format!("{x:e}")
}

/// One tested quantity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRow {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckRow {
    /// Passes when `residual ≤ tolerance`.
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64, residual: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            lhs,
            rhs,
            residual,
            tolerance,
            pass: residual <= tolerance,
        }
    }

    /// |lhs − rhs| against `tolerance`.
    pub fn equal(name: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        Self::new(name, lhs, rhs, (lhs - rhs).abs(), tolerance)
    }

    /// lhs ≥ rhs; the residual is the shortfall.
    pub fn at_least(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        Self::new(name, lhs, rhs, (rhs - lhs).max(0.0), 0.0)
    }

    pub fn summary(&self) -> String {
        format!(
            "{} {} lhs={} rhs={} residual={} tolerance={}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            fmt_num(self.lhs),
            fmt_num(self.rhs),
            fmt_num(self.residual),
            fmt_num(self.tolerance)
        )
    }
}

/// A CSV table with a header row.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_numbers(&mut self, values: &[f64]) {
        self.rows.push(values.iter().map(|&v| fmt_num(v)).collect());
    }

    pub fn push(&mut self, values: Vec<String>) {
        self.rows.push(values);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(out, "{}", r.join(","));
        }
        out
    }
}

pub fn checks_table(checks: &[CheckRow]) -> Table {
    let mut t = Table::new(&["check_name", "lhs", "rhs", "residual", "tolerance", "pass"]);
    for c in checks {
        t.push(vec![
            c.name.clone(),
            fmt_num(c.lhs),
            fmt_num(c.rhs),
            fmt_num(c.residual),
            fmt_num(c.tolerance),
            c.pass.to_string(),
        ]);
    }
    t
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    std::fs::write(dir.join(name), contents)?;
    Ok(())
}
