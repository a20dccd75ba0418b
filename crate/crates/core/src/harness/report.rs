//! Tabular output in three formats.
//!
//! Floats are printed with 6 significant digits. A mean/std column becomes
//! `mean±std` in text mode and a `_mean`/`_std` column pair in csv and jsonl.

use std::fmt;
use std::str::FromStr;

use serde_json::{Map, Number, Value};

use crate::error::{invalid, Error, Result};
use crate::harness::grid::GridCell;
use crate::harness::sensitivity::SensitivityReport;
use crate::metrics::{BoundTable, EvalReport, Metric};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Csv,
    Jsonl,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(Format::Text),
            "csv" => Ok(Format::Csv),
            "jsonl" => Ok(Format::Jsonl),
            _ => invalid(format!("unknown format {s:?} (expected text, csv or jsonl)")),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Text => "text",
            Format::Csv => "csv",
            Format::Jsonl => "jsonl",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ColumnKind {
    Text,
    Num,
    MeanStd,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Text(String),
    Num(f64),
    Int(i64),
    Bool(bool),
    MeanStd(f64, f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
}

impl Column {
    pub fn new(name: impl Into<String>, kind: ColumnKind) -> Self {
        Column { name: name.into(), kind }
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
}

/// `x` with 6 significant digits, trailing zeros removed.
pub fn fmt_sig(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent digits");
    if !(-5..6).contains(&exp) {
        return format!("{}e{exp}", trim_zeros(mantissa));
    }
    let decimals = (5 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) || s.starts_with(' ') || s.ends_with(' ') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn num_json(x: f64) -> Value {
    fmt_sig(x)
        .parse::<f64>()
        .ok()
        .and_then(Number::from_f64)
        .map_or(Value::Null, Value::Number)
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Num(x) => fmt_sig(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::MeanStd(m, s) => format!("{}±{}", fmt_sig(*m), fmt_sig(*s)),
        }
    }

    fn flat(&self) -> Vec<String> {
        match self {
            Cell::MeanStd(m, s) => vec![fmt_sig(*m), fmt_sig(*s)],
            other => vec![other.text()],
        }
    }

    fn json(&self) -> Vec<Value> {
        match self {
            Cell::Text(s) => vec![Value::String(s.clone())],
            Cell::Num(x) => vec![num_json(*x)],
            Cell::Int(i) => vec![Value::from(*i)],
            Cell::Bool(b) => vec![Value::Bool(*b)],
            Cell::MeanStd(m, s) => vec![num_json(*m), num_json(*s)],
        }
    }
}

impl Table {
    fn flat_header(&self) -> Vec<String> {
        self.columns
            .iter()
            .flat_map(|c| match c.kind {
                ColumnKind::MeanStd => vec![format!("{}_mean", c.name), format!("{}_std", c.name)],
                _ => vec![c.name.clone()],
            })
            .collect()
    }

    fn check(&self) -> Result<()> {
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != self.columns.len() {
                return invalid(format!("report row {i} has {} cells for {} columns", row.len(), self.columns.len()));
            }
        }
        Ok(())
    }

    fn render_text(&self) -> String {
        let header: Vec<String> = self.columns.iter().map(|c| c.name.clone()).collect();
        let body: Vec<Vec<String>> = self.rows.iter().map(|r| r.iter().map(Cell::text).collect()).collect();
        let widths: Vec<usize> = (0..header.len())
            .map(|j| {
                body.iter()
                    .map(|r| r[j].chars().count())
                    .chain([header[j].chars().count()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let line = |cells: &[String]| {
            let parts: Vec<String> = cells
                .iter()
                .zip(&widths)
                .map(|(c, &w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
                .collect();
            format!("{}\n", parts.join("  ").trim_end())
        };
        let mut out = line(&header);
        for row in &body {
            out.push_str(&line(row));
        }
        out
    }

    fn render_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = self.flat_header().iter().map(|h| csv_field(h)).collect();
        out.push_str(&header.join(","));
        out.push_str("\r\n");
        for row in &self.rows {
            let cells: Vec<String> = row.iter().flat_map(Cell::flat).map(|c| csv_field(&c)).collect();
            out.push_str(&cells.join(","));
            out.push_str("\r\n");
        }
        out
    }

    fn render_jsonl(&self) -> String {
        let keys = self.flat_header();
        let mut out = String::new();
        if self.rows.is_empty() {
            let header: Vec<Value> = keys.into_iter().map(Value::String).collect();
            out.push_str(&Value::Array(header).to_string());
            out.push('\n');
            return out;
        }
        for row in &self.rows {
            let mut obj = Map::new();
            for (k, v) in keys.iter().zip(row.iter().flat_map(Cell::json)) {
                obj.insert(k.clone(), v);
            }
            out.push_str(&Value::Object(obj).to_string());
            out.push('\n');
        }
        out
    }
}

/// Renders `table`. An empty table yields its header alone (a JSON array of
/// column names in jsonl mode).
pub fn emit_report(table: &Table, format: Format) -> Result<Vec<u8>> {
    table.check()?;
    let s = match format {
        Format::Text => table.render_text(),
        Format::Csv => table.render_csv(),
        Format::Jsonl => table.render_jsonl(),
    };
    Ok(s.into_bytes())
}

/// One row per metric.
pub fn eval_table(label: &str, report: &EvalReport) -> Table {
    let columns = vec![
        Column::new("method", ColumnKind::Text),
        Column::new("metric", ColumnKind::Text),
        Column::new("value", ColumnKind::MeanStd),
        Column::new("folds", ColumnKind::Num),
        Column::new("undefined", ColumnKind::Num),
    ];
    let rows = report
        .summaries
        .iter()
        .map(|s| {
            vec![
                Cell::Text(label.to_string()),
                Cell::Text(s.metric.name()),
                Cell::MeanStd(s.mean, s.std),
                Cell::Int(s.folds as i64),
                Cell::Int(s.undefined as i64),
            ]
        })
        .collect();
    Table { columns, rows }
}

fn metric_columns(metrics: &[Metric]) -> impl Iterator<Item = Column> + '_ {
    metrics.iter().map(|m| Column::new(m.name(), ColumnKind::MeanStd))
}

fn metric_cells<'a>(metrics: &'a [Metric], report: &'a EvalReport) -> impl Iterator<Item = Cell> + 'a {
    metrics.iter().map(|&m| match report.get(m) {
        Some(s) => Cell::MeanStd(s.mean, s.std),
        None => Cell::MeanStd(f64::NAN, f64::NAN),
    })
}

/// One row per (μ, ν) cell.
pub fn grid_table(cells: &[GridCell], metrics: &[Metric]) -> Table {
    let mut columns = vec![
        Column::new("scan", ColumnKind::Text),
        Column::new("mu", ColumnKind::Num),
        Column::new("nu", ColumnKind::Num),
    ];
    columns.extend(metric_columns(metrics));
    let rows = cells
        .iter()
        .map(|c| {
            let mut row = vec![Cell::Text(c.scan.as_str().into()), Cell::Num(c.mu), Cell::Num(c.nu)];
            row.extend(metric_cells(metrics, &c.report));
            row
        })
        .collect();
    Table { columns, rows }
}

/// One row per α.
pub fn sensitivity_table(report: &SensitivityReport, metrics: &[Metric]) -> Table {
    let mut columns = vec![
        Column::new("alpha", ColumnKind::Num),
        Column::new("dep", ColumnKind::Num),
        Column::new("rec", ColumnKind::Num),
        Column::new("dep_norm", ColumnKind::Num),
        Column::new("rec_norm", ColumnKind::Num),
        Column::new("clamped", ColumnKind::Text),
    ];
    columns.extend(metric_columns(metrics));
    let rows = report
        .rows
        .iter()
        .map(|r| {
            let mut row = vec![
                Cell::Num(r.alpha),
                Cell::Num(r.dep),
                Cell::Num(r.rec),
                Cell::Num(r.dep_norm),
                Cell::Num(r.rec_norm),
                Cell::Bool(r.clamped),
            ];
            row.extend(metric_cells(metrics, &r.report));
            row
        })
        .collect();
    Table { columns, rows }
}

/// Per-instance bound values side by side, followed by a `mean` row.
pub fn bounds_table(table: &BoundTable) -> Table {
    let mut columns = vec![Column::new("instance", ColumnKind::Text)];
    for c in &table.columns {
        columns.push(Column::new(c.label.clone(), ColumnKind::Num));
        columns.push(Column::new(format!("{}_n_mis", c.label), ColumnKind::Num));
    }
    let n = table.columns.first().map_or(0, |c| c.per_instance.len());
    let mut rows: Vec<Vec<Cell>> = (0..n)
        .map(|i| {
            let mut row = vec![Cell::Text(i.to_string())];
            for c in &table.columns {
                row.push(Cell::Num(c.per_instance[i].bound));
                row.push(Cell::Int(c.per_instance[i].n_mis as i64));
            }
            row
        })
        .collect();
    if n > 0 {
        let mut row = vec![Cell::Text("mean".into())];
        for c in &table.columns {
            row.push(Cell::Num(c.mean_bound));
            row.push(Cell::Num(c.mean_n_mis));
        }
        rows.push(row);
    }
    Table { columns, rows }
}
