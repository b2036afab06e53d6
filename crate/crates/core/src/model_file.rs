//! Model file format: a TOML document with the named 2-D arrays
//! `A`, `B`, `C`, `Gamma`, `Psi`, `Sigma_w`, `Sigma_v`, `Sigma_x`, `x_bar`
//! (row-major lists of lists). The same layout is used to dump designed gains
//! and augmented matrices for inspection.

use std::path::Path;

use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::numerics::{Matrix, Vector};
use crate::plant::{ModelParts, SystemModel};

pub const MODEL_KEYS: [&str; 9] = [
    "A", "B", "C", "Gamma", "Psi", "Sigma_w", "Sigma_v", "Sigma_x", "x_bar",
];

fn value_to_f64(key: &str, v: &Value) -> Result<f64> {
    match v {
        Value::Float(f) => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        other => Err(Error::parse(key, format!("expected a number, found {}", other.type_str()))),
    }
}

/// Read a row-major list of lists. A flat list is read as a column vector.
pub fn matrix_from_value(key: &str, v: &Value) -> Result<Matrix> {
    let rows = v
        .as_array()
        .ok_or_else(|| Error::parse(key, "expected an array of rows"))?;
    if rows.is_empty() {
        return Ok(Matrix::zeros(0, 0));
    }
    if rows.iter().all(|r| !r.is_array()) {
        let col: Vec<f64> = rows.iter().map(|x| value_to_f64(key, x)).collect::<Result<_>>()?;
        return Ok(Matrix::from_column_slice(col.len(), 1, &col));
    }
    let mut data = Vec::new();
    let mut width = None;
    for (i, row) in rows.iter().enumerate() {
        let row = row
            .as_array()
            .ok_or_else(|| Error::parse(key, format!("row {i} is not an array")))?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(Error::parse(key, format!("row {i} has {} entries, expected {w}", row.len())))
            }
            _ => {}
        }
        for x in row {
            data.push(value_to_f64(key, x)?);
        }
    }
    let width = width.unwrap_or(0);
    Ok(Matrix::from_row_slice(rows.len(), width, &data))
}

pub fn matrix_to_value(m: &Matrix) -> Value {
    Value::Array(
        m.row_iter()
            .map(|r| Value::Array(r.iter().map(|&x| Value::Float(x)).collect()))
            .collect(),
    )
}

fn required(table: &Table, key: &str) -> Result<Matrix> {
    let v = table
        .get(key)
        .ok_or_else(|| Error::parse(key, "missing required key"))?;
    matrix_from_value(key, v)
}

pub fn parse_model(text: &str) -> Result<SystemModel> {
    let table: Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::parse("<document>", e.message().to_string()))?;
    let x_bar = required(&table, "x_bar")?;
    if x_bar.ncols() > 1 {
        return Err(Error::parse("x_bar", "must be a column vector"));
    }
    let parts = ModelParts {
        a: required(&table, "A")?,
        b: required(&table, "B")?,
        c: required(&table, "C")?,
        gamma: required(&table, "Gamma")?,
        psi: required(&table, "Psi")?,
        sigma_w: required(&table, "Sigma_w")?,
        sigma_v: required(&table, "Sigma_v")?,
        sigma_x: required(&table, "Sigma_x")?,
        x_bar: Vector::from_column_slice(x_bar.as_slice()),
    };
    SystemModel::new(parts)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<SystemModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_model(&text)
}

/// Serialize named matrices in key order.
pub fn write_matrices(entries: &[(&str, &Matrix)]) -> String {
    let mut table = Table::new();
    for (k, m) in entries {
        table.insert((*k).to_string(), matrix_to_value(m));
    }
    toml::to_string(&table).expect("matrices serialize")
}

pub fn model_to_string(model: &SystemModel) -> String {
    let p = model.parts();
    let x_bar = Matrix::from_column_slice(p.x_bar.len(), 1, p.x_bar.as_slice());
    let mut out = String::new();
    for (k, m) in [
        ("A", &p.a),
        ("B", &p.b),
        ("C", &p.c),
        ("Gamma", &p.gamma),
        ("Psi", &p.psi),
        ("Sigma_w", &p.sigma_w),
        ("Sigma_v", &p.sigma_v),
        ("Sigma_x", &p.sigma_x),
        ("x_bar", &x_bar),
    ] {
        out.push_str(&write_matrices(&[(k, m)]));
    }
    out
}

/// Hex SHA-256 of the canonical serialization, used to tie policy files to their model.
pub fn model_hash(model: &SystemModel) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(model_to_string(model).as_bytes()))
}
