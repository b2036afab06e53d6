//! CSV artifacts: trajectory, sweep and baseline tables.
//!
//! Comma-delimited, one header row, floats as `{:.16e}` (17 significant
//! digits, so every value parses back to the same bits).

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::harness::{BaselineReport, PairedTrajectory};
use crate::performance::SweepEntry;
use crate::pipeline::DetectorConfig;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Bool(bool),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => format!("{x:.16e}"),
            Cell::Bool(b) => b.to_string(),
        }
    }
}

/// A header plus rows of cells, written in one pass.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn to_csv_string(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("CSV is UTF-8")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.to_csv_string().as_bytes()).map_err(|e| Error::io(path, e))
    }
}

/// A parsed CSV with every cell read as `f64` (`true`/`false` as 1/0).
#[derive(Clone, Debug, PartialEq)]
pub struct NumericTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl NumericTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

fn parse_cell(s: &str, line: usize, column: &str) -> Result<f64> {
    match s {
        "true" => Ok(1.0),
        "false" => Ok(0.0),
        _ => s
            .parse::<f64>()
            .map_err(|_| Error::parse(column, format!("line {line}: `{s}` is not a number"))),
    }
}

pub fn parse_csv(text: &str) -> Result<NumericTable> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let columns: Vec<String> = r
        .headers()
        .map_err(|e| Error::parse("<header>", e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::parse("<row>", e.to_string()))?;
        let row = rec
            .iter()
            .zip(&columns)
            .map(|(cell, col)| parse_cell(cell, i + 2, col))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(NumericTable { columns, rows })
}

pub fn read_csv(path: &Path) -> Result<NumericTable> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text)
}

fn indexed(prefix: &str, k: usize) -> impl Iterator<Item = String> + '_ {
    (0..k).map(move |i| format!("{prefix}_{i}"))
}

/// Columns `t, x_i, x_nom_i, u_i, e_i, g_sys, g_nom, alarm_sys, alarm_nom, nu_err`.
pub fn trajectory_table(traj: &PairedTrajectory, detector: &DetectorConfig) -> Table {
    let first = &traj.records[0];
    let (n, m, s) = (first.x.len(), first.u.len(), first.e.len());
    let mut columns = vec!["t".to_string()];
    columns.extend(indexed("x", n));
    columns.extend(indexed("x_nom", n));
    columns.extend(indexed("u", m));
    columns.extend(indexed("e", s));
    columns.extend(["g_sys", "g_nom", "alarm_sys", "alarm_nom", "nu_err"].map(str::to_string));
    let rows = traj
        .records
        .iter()
        .map(|r| {
            let mut row = vec![Cell::Int(r.t)];
            for v in [&r.x, &r.x_nominal, &r.u, &r.e] {
                row.extend(v.iter().map(|&x| Cell::Float(x)));
            }
            row.push(Cell::Float(r.g_system));
            row.push(Cell::Float(r.g_nominal));
            row.push(Cell::Int(detector.alarm(r.g_system) as i64));
            row.push(Cell::Int(detector.alarm(r.g_nominal) as i64));
            row.push(Cell::Float(r.nu_error()));
            row
        })
        .collect();
    Table { columns, rows }
}

/// Columns `alpha, J_d, J_c, J_star, converged`; failed points carry NaN costs.
pub fn sweep_table(entries: &[SweepEntry]) -> Table {
    let columns = ["alpha", "J_d", "J_c", "J_star", "converged"].map(str::to_string).to_vec();
    let rows = entries
        .iter()
        .map(|e| {
            let (j_d, j_c, j_star, ok) = match &e.outcome {
                Ok(r) => (r.j_d, r.j_c, r.j_star.unwrap_or(f64::NAN), true),
                Err(_) => (f64::NAN, f64::NAN, f64::NAN, false),
            };
            vec![
                Cell::Float(e.alpha.value()),
                Cell::Float(j_d),
                Cell::Float(j_c),
                Cell::Float(j_star),
                Cell::Bool(ok),
            ]
        })
        .collect();
    Table { columns, rows }
}

/// Columns `t, g, alarm` for the no-attack calibration run.
pub fn baseline_table(report: &BaselineReport) -> Table {
    let columns = ["t", "g", "alarm"].map(str::to_string).to_vec();
    let rows = report
        .statistics
        .iter()
        .enumerate()
        .map(|(k, &g)| vec![Cell::Int(k as i64), Cell::Float(g), Cell::Int((g > report.threshold) as i64)])
        .collect();
    Table { columns, rows }
}
