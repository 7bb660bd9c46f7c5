//! Deterministic CSV emission.
//!
//! Floats are written with nine significant digits in scientific notation so
//! that tables are byte-identical across platforms for identical inputs.

use std::fmt::Write as _;

/// Nine significant digits, e.g. `1.23456789e-4`.
pub fn fmt_float(x: f64) -> String {
    if x == 0.0 {
        // Avoid "-0.00000000e0".
        return "0.00000000e0".to_owned();
    }
    format!("{x:.8e}")
}

#[derive(Debug, Clone, Default)]
pub struct CsvTable {
    comment: Option<String>,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { comment: None, header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    /// A `# ...` line written before the header.
    pub fn with_comment(mut self, comment: impl Into<String>) -> Self {
        self.comment = Some(comment.into());
        self
    }

    pub fn push_row(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len(), "row width differs from header");
        self.rows.push(row);
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        if let Some(c) = &self.comment {
            let _ = writeln!(out, "# {c}");
        }
        let _ = writeln!(out, "{}", self.header.join(","));
        for r in &self.rows {
            let _ = writeln!(out, "{}", r.join(","));
        }
        out
    }
}
