use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;

use chrono::NaiveDate;
use serde::ser::SerializeSeq;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnType {
    Text,
    Integer,
    Decimal,
    Date,
    /// A fraction: 0.02 renders as "2.00%".
    Percent,
    /// Integer cents.
    Currency,
}

impl ColumnType {
    pub fn as_str(self) -> &'static str {
        match self {
            ColumnType::Text => "text",
            ColumnType::Integer => "integer",
            ColumnType::Decimal => "decimal",
            ColumnType::Date => "date",
            ColumnType::Percent => "percent",
            ColumnType::Currency => "currency",
        }
    }

    pub fn is_numeric(self) -> bool {
        matches!(
            self,
            ColumnType::Integer | ColumnType::Decimal | ColumnType::Percent | ColumnType::Currency
        )
    }
}

impl fmt::Display for ColumnType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: ColumnType,
}

impl Column {
    pub fn new(name: impl Into<String>, ty: ColumnType) -> Self {
        Column { name: name.into(), ty }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Integer(i64),
    Decimal(f64),
    Date(NaiveDate),
    Percent(f64),
    Currency(i64),
    NotAvailable,
}

impl Cell {
    pub fn is_na(&self) -> bool {
        matches!(self, Cell::NotAvailable)
    }

    pub fn matches_type(&self, ty: ColumnType) -> bool {
        match self {
            Cell::NotAvailable => true,
            Cell::Text(_) => ty == ColumnType::Text,
            Cell::Integer(_) => ty == ColumnType::Integer,
            Cell::Decimal(v) => ty == ColumnType::Decimal && v.is_finite(),
            Cell::Date(_) => ty == ColumnType::Date,
            Cell::Percent(v) => ty == ColumnType::Percent && v.is_finite(),
            Cell::Currency(_) => ty == ColumnType::Currency,
        }
    }

    /// Numeric value; currency in cents.
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Integer(v) | Cell::Currency(v) => Some(*v as f64),
            Cell::Decimal(v) | Cell::Percent(v) => Some(*v),
            _ => None,
        }
    }

    /// Total order among non-NA cells of the same type; `None` otherwise.
    pub fn compare(&self, other: &Cell) -> Option<Ordering> {
        match (self, other) {
            (Cell::Text(a), Cell::Text(b)) => Some(a.cmp(b)),
            (Cell::Integer(a), Cell::Integer(b)) | (Cell::Currency(a), Cell::Currency(b)) => Some(a.cmp(b)),
            (Cell::Decimal(a), Cell::Decimal(b)) | (Cell::Percent(a), Cell::Percent(b)) => Some(a.total_cmp(b)),
            (Cell::Date(a), Cell::Date(b)) => Some(a.cmp(b)),
            _ => None,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Integer(v) | Cell::Currency(v) => Value::from(*v),
            Cell::Decimal(v) | Cell::Percent(v) => Value::from(*v),
            Cell::Date(d) => Value::String(d.to_string()),
            Cell::NotAvailable => Value::Null,
        }
    }

    pub fn from_json(v: &Value, ty: ColumnType) -> Option<Cell> {
        if v.is_null() {
            return Some(Cell::NotAvailable);
        }
        Some(match ty {
            ColumnType::Text => Cell::Text(v.as_str()?.to_string()),
            ColumnType::Integer => Cell::Integer(v.as_i64()?),
            ColumnType::Currency => Cell::Currency(v.as_i64()?),
            ColumnType::Decimal => Cell::Decimal(v.as_f64()?),
            ColumnType::Percent => Cell::Percent(v.as_f64()?),
            ColumnType::Date => Cell::Date(NaiveDate::parse_from_str(v.as_str()?, "%Y-%m-%d").ok()?),
        })
    }
}

/// Rectangular typed table. Construction validates arity, types and
/// column-name uniqueness.
#[derive(Debug, Clone, PartialEq)]
pub struct DataTable {
    columns: Vec<Column>,
    rows: Vec<Vec<Cell>>,
}

impl DataTable {
    pub fn new(columns: Vec<Column>, rows: Vec<Vec<Cell>>) -> Result<Self> {
        let mut seen = HashSet::new();
        for c in &columns {
            if !seen.insert(c.name.as_str()) {
                return Err(Error::InvalidInput(format!("duplicate column '{}'", c.name)));
            }
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != columns.len() {
                return Err(Error::InvalidInput(format!(
                    "row {i} has {} cells, expected {}",
                    row.len(),
                    columns.len()
                )));
            }
            for (cell, col) in row.iter().zip(&columns) {
                if !cell.matches_type(col.ty) {
                    return Err(Error::InvalidInput(format!(
                        "row {i}: cell {cell:?} does not match column '{}' of type {}",
                        col.name, col.ty
                    )));
                }
            }
        }
        Ok(DataTable { columns, rows })
    }

    pub fn empty(columns: Vec<Column>) -> Result<Self> {
        Self::new(columns, Vec::new())
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    /// Cells of one column, top to bottom.
    pub fn values(&self, name: &str) -> Option<Vec<&Cell>> {
        let i = self.column_index(name)?;
        Some(self.rows.iter().map(|r| &r[i]).collect())
    }
}

impl Serialize for DataTable {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        struct Rows<'a>(&'a [Vec<Cell>]);
        impl Serialize for Rows<'_> {
            fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                let mut seq = s.serialize_seq(Some(self.0.len()))?;
                for row in self.0 {
                    let vals: Vec<Value> = row.iter().map(Cell::to_json).collect();
                    seq.serialize_element(&vals)?;
                }
                seq.end()
            }
        }
        #[derive(Serialize)]
        struct Wire<'a> {
            columns: &'a [Column],
            rows: Rows<'a>,
        }
        Wire {
            columns: &self.columns,
            rows: Rows(&self.rows),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for DataTable {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Wire {
            columns: Vec<Column>,
            rows: Vec<Vec<Value>>,
        }
        let w = Wire::deserialize(d)?;
        let mut rows = Vec::with_capacity(w.rows.len());
        for (i, raw) in w.rows.iter().enumerate() {
            if raw.len() != w.columns.len() {
                return Err(serde::de::Error::custom(format!("row {i} has wrong arity")));
            }
            let row = raw
                .iter()
                .zip(&w.columns)
                .map(|(v, c)| {
                    Cell::from_json(v, c.ty)
                        .ok_or_else(|| serde::de::Error::custom(format!("row {i}: bad value for '{}'", c.name)))
                })
                .collect::<std::result::Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        DataTable::new(w.columns, rows).map_err(serde::de::Error::custom)
    }
}

fn group_thousands(digits: &str) -> String {
    let mut out = String::with_capacity(digits.len() + digits.len() / 3);
    for (i, ch) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i) % 3 == 0 {
            out.push(',');
        }
        out.push(ch);
    }
    out
}

/// "1,234.56" style with `decimals` places; no "-0".
pub fn format_number(v: f64, decimals: usize) -> String {
    let s = format!("{:.*}", decimals, v.abs());
    let (int, frac) = match s.split_once('.') {
        Some((i, f)) => (i.to_string(), Some(f.to_string())),
        None => (s.clone(), None),
    };
    let is_zero = s.chars().all(|c| c == '0' || c == '.');
    let mut out = String::new();
    if v < 0.0 && !is_zero {
        out.push('-');
    }
    out.push_str(&group_thousands(&int));
    if let Some(f) = frac {
        out.push('.');
        out.push_str(&f);
    }
    out
}

pub fn format_currency(cents: i64) -> String {
    let sign = if cents < 0 { "-" } else { "" };
    let abs = cents.unsigned_abs();
    format!("{sign}${}.{:02}", group_thousands(&(abs / 100).to_string()), abs % 100)
}

pub fn format_percent(fraction: f64) -> String {
    format!("{}%", format_number(fraction * 100.0, 2))
}

/// Display text for a cell. Columns named `month` render as `YYYY-MM`.
pub fn format_cell(cell: &Cell, column_name: &str) -> String {
    match cell {
        Cell::Text(s) => s.clone(),
        Cell::Integer(v) => {
            let sign = if *v < 0 { "-" } else { "" };
            format!("{sign}{}", group_thousands(&v.unsigned_abs().to_string()))
        }
        Cell::Decimal(v) => format_number(*v, 2),
        Cell::Date(d) if column_name == "month" => d.format("%Y-%m").to_string(),
        Cell::Date(d) => d.to_string(),
        Cell::Percent(p) => format_percent(*p),
        Cell::Currency(c) => format_currency(*c),
        Cell::NotAvailable => "N/A".to_string(),
    }
}
