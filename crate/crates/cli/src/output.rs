use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::CliError;

/// Ten significant digits; fixed notation for magnitudes in `[1e-4, 1e10)`.
pub fn num(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let exp = v.abs().log10().floor() as i32;
    if (-4..10).contains(&exp) {
        let decimals = (9 - exp).max(0) as usize;
        format!("{v:.decimals$}")
    } else {
        format!("{v:.9e}")
    }
}

/// Short display form used in human-readable reports.
pub fn short(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else {
        format!("{v:.4}")
    }
}

pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

#[derive(Default)]
pub struct Csv {
    buf: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut csv = Csv::default();
        csv.buf.push_str(&header.join(","));
        csv.buf.push('\n');
        csv
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        let fields: Vec<String> = cells
            .into_iter()
            .map(|c| match c {
                Cell::Int(v) => v.to_string(),
                Cell::Num(v) => num(v),
                Cell::Text(s) => s,
            })
            .collect();
        let _ = writeln!(self.buf, "{}", fields.join(","));
    }

    pub fn as_str(&self) -> &str {
        &self.buf
    }
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir).map_err(|err| CliError::Io(format!("cannot create {}: {err}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|err| CliError::Io(format!("cannot write {}: {err}", path.display())))?;
    Ok(path)
}
