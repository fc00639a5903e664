//! CSV tables with fixed column lists.
//!
//! Floats are written in Rust's shortest round-trip form, so a value read
//! back parses to the identical `f64`.

use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Text(String),
    Bool(bool),
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Float(v) => write!(f, "{v:?}"),
            Cell::Text(v) => f.write_str(v),
            Cell::Bool(v) => write!(f, "{v}"),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}
impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}
impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}
impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
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

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub file: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

#[macro_export]
#[doc(hidden)]
macro_rules! row {
    ($($v:expr),* $(,)?) => { vec![$($crate::experiment::Cell::from($v)),*] };
}

impl Table {
    pub fn new(file: &str, columns: &[&str]) -> Self {
        Self {
            file: file.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width for {}", self.file);
        self.rows.push(row);
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(dir.join(&self.file)).map_err(csv_error)?;
        w.write_record(&self.columns).map_err(csv_error)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|c| c.to_string())).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Malformed {
            file: String::new(),
            message: format!("{other:?}"),
        },
    }
}

/// A CSV read back for verification, with typed column access.
#[derive(Clone, Debug)]
pub struct CsvData {
    file: String,
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvData {
    pub fn read(path: &Path) -> Result<Self> {
        let file = path
            .file_name()
            .map(|f| f.to_string_lossy().into_owned())
            .unwrap_or_default();
        let malformed = |message: String| Error::Malformed {
            file: file.clone(),
            message,
        };
        let mut r = csv::Reader::from_path(path).map_err(|e| malformed(e.to_string()))?;
        let columns = r
            .headers()
            .map_err(|e| malformed(e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|r| r.iter().map(str::to_string).collect()))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| malformed(e.to_string()))?;
        Ok(Self { file, columns, rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn index(&self, column: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == column)
            .ok_or_else(|| Error::Malformed {
                file: self.file.clone(),
                message: format!("missing column {column}"),
            })
    }

    pub fn text(&self, column: &str) -> Result<Vec<String>> {
        let i = self.index(column)?;
        Ok(self.rows.iter().map(|r| r[i].clone()).collect())
    }

    pub fn floats(&self, column: &str) -> Result<Vec<f64>> {
        let i = self.index(column)?;
        self.rows
            .iter()
            .enumerate()
            .map(|(k, r)| {
                r[i].parse().map_err(|_| Error::Malformed {
                    file: self.file.clone(),
                    message: format!("row {}: {column} = {:?} is not a number", k + 1, r[i]),
                })
            })
            .collect()
    }

    pub fn ints(&self, column: &str) -> Result<Vec<usize>> {
        Ok(self.floats(column)?.into_iter().map(|v| v as usize).collect())
    }
}
