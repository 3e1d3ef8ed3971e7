//! Output tables.
//!
//! Dialect: comma separated, header row, LF line endings, UTF-8, '.' decimal
//! point. Floats are written with 17 significant digits so that every value
//! reads back to the same f64; NaN is written as `NaN`.

use std::fmt;

use kryres::circuits::fmt17;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TableError {
    #[error("csv: {0}")]
    Csv(String),
    #[error("row {row} has {found} fields, header has {expected}")]
    Ragged { row: usize, expected: usize, found: usize },
    #[error("no column named '{0}'")]
    MissingColumn(String),
    #[error("row {row}, column '{column}': '{value}' is not a number")]
    NotNumeric { row: usize, column: String, value: String },
    #[error("table has no header")]
    NoHeader,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Text(String),
    Int(i64),
    Float(f64),
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Text(s) => f.write_str(s),
            Cell::Int(i) => write!(f, "{i}"),
            Cell::Float(x) if x.is_nan() => f.write_str("NaN"),
            Cell::Float(x) if x.is_infinite() => f.write_str(if *x > 0.0 { "inf" } else { "-inf" }),
            Cell::Float(x) => f.write_str(&fmt17(*x)),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Result<usize, TableError> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| TableError::MissingColumn(name.to_string()))
    }

    /// Column as text, in row order.
    pub fn text_column(&self, name: &str) -> Result<Vec<String>, TableError> {
        let j = self.column_index(name)?;
        Ok(self.rows.iter().map(|r| r[j].to_string()).collect())
    }

    /// Column as numbers; text cells are parsed.
    pub fn numeric_column(&self, name: &str) -> Result<Vec<f64>, TableError> {
        let j = self.column_index(name)?;
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| match &r[j] {
                Cell::Float(x) => Ok(*x),
                Cell::Int(v) => Ok(*v as f64),
                Cell::Text(s) => parse_number(s).ok_or_else(|| TableError::NotNumeric {
                    row: i + 1,
                    column: name.to_string(),
                    value: s.clone(),
                }),
            })
            .collect()
    }

    /// Rows whose `key` column equals `value`.
    pub fn filter(&self, key: &str, value: &str) -> Result<Table, TableError> {
        let j = self.column_index(key)?;
        Ok(Table {
            columns: self.columns.clone(),
            rows: self.rows.iter().filter(|r| r[j].to_string() == value).cloned().collect(),
        })
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.columns).expect("writing to memory");
        for r in &self.rows {
            w.write_record(r.iter().map(|c| c.to_string())).expect("writing to memory");
        }
        String::from_utf8(w.into_inner().expect("writing to memory")).expect("csv output is UTF-8")
    }

    /// Reads a table; all cells come back as text.
    pub fn parse(text: &str) -> Result<Table, TableError> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .from_reader(text.as_bytes());
        let columns: Vec<String> = r
            .headers()
            .map_err(|e| TableError::Csv(e.to_string()))?
            .iter()
            .map(|s| s.trim().to_string())
            .collect();
        if columns.is_empty() || columns.iter().all(String::is_empty) {
            return Err(TableError::NoHeader);
        }
        let mut rows = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| TableError::Csv(e.to_string()))?;
            if rec.len() != columns.len() {
                return Err(TableError::Ragged {
                    row: i + 1,
                    expected: columns.len(),
                    found: rec.len(),
                });
            }
            rows.push(rec.iter().map(|s| Cell::Text(s.trim().to_string())).collect());
        }
        Ok(Table { columns, rows })
    }
}

pub fn parse_number(s: &str) -> Option<f64> {
    match s {
        "NaN" => Some(f64::NAN),
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        _ => s.parse().ok(),
    }
}
