//! Tables rendered as aligned text and as CSV.
//!
//! Text output rounds for reading: three decimals, p-values below 0.0005
//! print as `0.000`, large magnitudes switch to `1.306e12` style. CSV output
//! keeps every number at full precision. Both use `.` as the decimal point.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use followcast_core::stats::Descriptive;

use crate::config::ReportFormat;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Int(i128),
    /// Rounded to three decimals in text.
    Num(f64),
    /// Three decimals, or scientific from 1e6 up.
    Big(f64),
    /// Probability: `0.000` below 0.0005.
    P(f64),
    /// Value and significance stars, e.g. `-0.872***`.
    Starred(f64, &'static str),
    Empty,
}

impl Cell {
    pub fn text(s: impl Into<String>) -> Self {
        Cell::Text(s.into())
    }

    pub fn int(v: impl Into<i128>) -> Self {
        Cell::Int(v.into())
    }

    pub fn opt(v: Option<f64>) -> Self {
        v.map_or(Cell::text("absent"), Cell::Num)
    }

    fn is_numeric(&self) -> bool {
        !matches!(self, Cell::Text(_) | Cell::Empty)
    }

    pub fn render_text(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Int(v) => v.to_string(),
            Cell::Num(v) => fixed3(*v),
            Cell::Big(v) => big(*v),
            Cell::P(p) => p_value(*p),
            Cell::Starred(v, stars) => format!("{}{stars}", fixed3(*v)),
            Cell::Empty => String::new(),
        }
    }

    pub fn render_csv(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Int(v) => v.to_string(),
            Cell::Num(v) | Cell::Big(v) | Cell::P(v) | Cell::Starred(v, _) => full(*v),
            Cell::Empty => String::new(),
        }
    }
}

/// Shortest round-trip form; non-finite values spelled out.
pub fn full(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else if v == v.trunc() && v.abs() < 1e16 {
        v.to_string()
    } else {
        // Debug switches to exponent form for tiny and huge magnitudes.
        format!("{v:?}")
    }
}

pub fn fixed3(v: f64) -> String {
    if !v.is_finite() {
        return full(v);
    }
    let s = format!("{v:.3}");
    if s == "-0.000" {
        "0.000".into()
    } else {
        s
    }
}

fn big(v: f64) -> String {
    if v.is_finite() && v.abs() >= 1e6 {
        format!("{v:.3e}")
    } else {
        fixed3(v)
    }
}

pub fn p_value(p: f64) -> String {
    if p < 0.0005 {
        "0.000".into()
    } else {
        fixed3(p)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// File stem of the CSV rendering.
    pub name: String,
    pub title: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub notes: Vec<String>,
}

impl Table {
    pub fn new(name: &str, title: &str, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            title: title.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len(), "{}", self.name);
        self.rows.push(row);
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    /// Title, header, rule, rows and notes. The first column is left
    /// aligned, numeric cells right aligned.
    pub fn render_text(&self) -> String {
        let cells: Vec<Vec<String>> = self.rows.iter().map(|r| r.iter().map(Cell::render_text).collect()).collect();
        let width = |j: usize| {
            cells
                .iter()
                .map(|r| r[j].chars().count())
                .chain([self.columns[j].chars().count()])
                .max()
                .unwrap_or(0)
        };
        let widths: Vec<usize> = (0..self.columns.len()).map(width).collect();
        let numeric: Vec<bool> = (0..self.columns.len())
            .map(|j| j > 0 && self.rows.iter().any(|r| r[j].is_numeric()))
            .collect();
        let line = |fields: &[String]| {
            let mut s = String::new();
            for (j, f) in fields.iter().enumerate() {
                if j > 0 {
                    s.push_str("  ");
                }
                let pad = widths[j] - f.chars().count();
                if numeric[j] {
                    s.push_str(&" ".repeat(pad));
                    s.push_str(f);
                } else {
                    s.push_str(f);
                    s.push_str(&" ".repeat(pad));
                }
            }
            s.trim_end().to_string()
        };
        let mut out = String::new();
        writeln!(out, "{}", self.title).unwrap();
        writeln!(out).unwrap();
        let header = line(&self.columns);
        writeln!(out, "{header}").unwrap();
        let total: usize = widths.iter().sum::<usize>() + 2 * widths.len().saturating_sub(1);
        writeln!(out, "{}", "-".repeat(total)).unwrap();
        for r in &cells {
            writeln!(out, "{}", line(r)).unwrap();
        }
        if !self.notes.is_empty() {
            writeln!(out).unwrap();
            for n in &self.notes {
                writeln!(out, "{n}").unwrap();
            }
        }
        out
    }

    pub fn render_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let err = |e: csv::Error| Error::format(&self.name, e.to_string());
        w.write_record(&self.columns).map_err(err)?;
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::render_csv)).map_err(err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::format(&self.name, e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv of UTF-8 cells"))
    }
}

/// Writes `<stem>.txt` with every table and one `<table.name>.csv` per
/// table, as the formats request. Returns the paths written.
pub fn write_reports(dir: &Path, stem: &str, tables: &[Table], formats: &[ReportFormat]) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    if formats.contains(&ReportFormat::Text) {
        let text = tables.iter().map(Table::render_text).collect::<Vec<_>>().join("\n");
        let path = dir.join(format!("{stem}.txt"));
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    if formats.contains(&ReportFormat::Csv) {
        for t in tables {
            let path = dir.join(format!("{}.csv", t.name));
            std::fs::write(&path, t.render_csv()?).map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Columns of a descriptive-statistics row after its label columns.
pub const DESCRIPTIVE_COLUMNS: [&str; 7] = ["Mean", "SD", "Median", "95 % interval lower", "95 % interval upper", "Min", "Max"];

pub fn descriptive_cells(d: &Descriptive) -> Vec<Cell> {
    [d.mean, d.sd, d.median, d.lower, d.upper, d.min, d.max]
        .into_iter()
        .map(Cell::Num)
        .collect()
}

/// Bin edges 0, 1, 2, 5, 10, 20, 50, ... up to the first edge above `max`.
pub fn log_edges(max: f64) -> Vec<f64> {
    let mut edges = vec![0.0, 1.0];
    let mut decade = 1.0;
    'grow: loop {
        for m in [2.0, 5.0, 10.0] {
            if *edges.last().expect("nonempty") > max {
                break 'grow;
            }
            edges.push(m * decade);
        }
        decade *= 10.0;
    }
    edges
}

/// Counts per half-open bin `[edges[i], edges[i + 1])`. Values outside the
/// edges are not counted.
pub fn histogram(values: &[f64], edges: &[f64]) -> Vec<usize> {
    let mut counts = vec![0; edges.len().saturating_sub(1)];
    for &v in values {
        let i = edges.partition_point(|&e| e <= v);
        if i > 0 && i < edges.len() {
            counts[i - 1] += 1;
        }
    }
    counts
}
