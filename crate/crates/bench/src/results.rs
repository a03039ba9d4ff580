//! Result files.
//!
//! CSV columns, in order: `algorithm, grid_volume, peak_charge, local_cost,
//! total, reduction, ratio`. JSON is an array of objects with the same keys.
//! Numbers carry 6 decimals; an unbounded ratio is `inf` in CSV and `null`
//! in JSON.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use peakdispatch::rational::to_f64;
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{BenchError, Result};
use crate::experiment::ResultRow;
use crate::sweep::SweepReport;
use crate::traces::csv_io;

pub const COLUMNS: [&str; 7] = [
    "algorithm",
    "grid_volume",
    "peak_charge",
    "local_cost",
    "total",
    "reduction",
    "ratio",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(BenchError::Config(format!("unknown format {other:?}"))),
        }
    }
}

/// A result row as read back from a file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultRecord {
    pub algorithm: String,
    pub grid_volume: f64,
    pub peak_charge: f64,
    pub local_cost: f64,
    pub total: f64,
    pub reduction: f64,
    #[serde(deserialize_with = "ratio_or_inf")]
    pub ratio: f64,
}

fn ratio_or_inf<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Text(String),
        Null(()),
    }
    match Raw::deserialize(d)? {
        Raw::Num(x) => Ok(x),
        Raw::Null(()) => Ok(f64::INFINITY),
        Raw::Text(s) if s == "inf" => Ok(f64::INFINITY),
        Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
    }
}

fn fixed(x: f64) -> String {
    if x.is_infinite() {
        "inf".into()
    } else {
        format!("{x:.6}")
    }
}

fn cells(row: &ResultRow) -> [String; 7] {
    [
        row.algorithm.name().to_string(),
        fixed(to_f64(&row.cost.grid_volume)),
        fixed(to_f64(&row.cost.peak_charge)),
        fixed(to_f64(&row.cost.local_cost)),
        fixed(to_f64(&row.cost.total)),
        fixed(row.reduction),
        fixed(row.ratio),
    ]
}

impl ResultRecord {
    /// The record a row turns into after a trip through a file.
    pub fn from_row(row: &ResultRow) -> Self {
        let c = cells(row);
        let num = |s: &str| if s == "inf" { f64::INFINITY } else { s.parse().unwrap() };
        Self {
            algorithm: c[0].clone(),
            grid_volume: num(&c[1]),
            peak_charge: num(&c[2]),
            local_cost: num(&c[3]),
            total: num(&c[4]),
            reduction: num(&c[5]),
            ratio: num(&c[6]),
        }
    }
}

pub fn render_csv(rows: &[ResultRow]) -> String {
    let mut out = COLUMNS.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&cells(row).join(","));
        out.push('\n');
    }
    out
}

pub fn render_json(rows: &[ResultRow]) -> String {
    if rows.is_empty() {
        return "[]\n".into();
    }
    let mut out = String::from("[\n");
    for (i, row) in rows.iter().enumerate() {
        let c = cells(row);
        out.push_str("  {");
        for (k, (key, value)) in COLUMNS.iter().zip(&c).enumerate() {
            if k > 0 {
                out.push_str(", ");
            }
            let value = match (k, value.as_str()) {
                (0, name) => format!("\"{name}\""),
                (_, "inf") => "null".into(),
                (_, v) => v.to_string(),
            };
            let _ = write!(out, "\"{key}\": {value}");
        }
        out.push('}');
        if i + 1 < rows.len() {
            out.push(',');
        }
        out.push('\n');
    }
    out.push_str("]\n");
    out
}

pub fn render_results(rows: &[ResultRow], format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => render_csv(rows),
        OutputFormat::Json => render_json(rows),
    }
}

pub fn emit_results(rows: &[ResultRow], path: &Path, format: OutputFormat) -> Result<()> {
    std::fs::write(path, render_results(rows, format)).map_err(|e| BenchError::io(path, e))
}

pub fn parse_results(path: &Path, format: OutputFormat) -> Result<Vec<ResultRecord>> {
    match format {
        OutputFormat::Csv => {
            let mut reader = csv::Reader::from_path(path).map_err(|e| csv_io(path, e))?;
            let headers = reader.headers().map_err(|e| csv_io(path, e))?.clone();
            if headers.iter().ne(COLUMNS) {
                return Err(BenchError::Parse {
                    path: path.to_path_buf(),
                    line: 1,
                    message: format!("unexpected header {headers:?}"),
                });
            }
            reader
                .deserialize()
                .enumerate()
                .map(|(i, r)| {
                    r.map_err(|e| BenchError::Parse {
                        path: path.to_path_buf(),
                        line: i + 2,
                        message: e.to_string(),
                    })
                })
                .collect()
        }
        OutputFormat::Json => {
            let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
            serde_json::from_str(&text).map_err(|e| BenchError::Parse {
                path: path.to_path_buf(),
                line: e.line(),
                message: e.to_string(),
            })
        }
    }
}

/// Plot-ready sweep table: one line per (point, algorithm).
pub fn render_sweep_csv(report: &SweepReport) -> String {
    let mut out = format!("parameter,value,{}\n", COLUMNS.join(","));
    for point in &report.points {
        for row in &point.rows {
            let _ = writeln!(
                out,
                "{},{},{}",
                report.parameter.name(),
                point.label,
                cells(row).join(",")
            );
        }
    }
    out
}
