//! Built-in pure table transforms. Each has a schema pass (used by plan
//! validation without running anything) and an apply pass.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use chrono::{Datelike, Days, NaiveDate};
use serde_json::{Map, Value};

use super::table::{Cell, Column, ColumnType, DataTable};
use crate::error::{Error, Result};
use crate::manager::temporal::minus_one_year;

const BUILTINS: [(&str, usize); 6] = [
    ("aggregate", 1),
    ("group_by", 1),
    ("top_k", 1),
    ("filter", 1),
    ("yoy_delta", 2),
    ("time_bucket", 1),
];

pub fn is_builtin(name: &str) -> bool {
    BUILTINS.iter().any(|(n, _)| *n == name)
}

/// Input table count of a built-in (0 for unknown names).
pub fn input_count(name: &str) -> usize {
    BUILTINS.iter().find(|(n, _)| *n == name).map_or(0, |(_, k)| *k)
}

#[derive(Debug, Clone, PartialEq)]
pub enum SchemaError {
    UnknownColumn {
        param: String,
        column: String,
        available: Vec<String>,
    },
    Invalid(String),
}

impl fmt::Display for SchemaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchemaError::UnknownColumn {
                param,
                column,
                available,
            } => write!(
                f,
                "param '{param}' references unknown column '{column}' (available: {})",
                available.join(", ")
            ),
            SchemaError::Invalid(msg) => f.write_str(msg),
        }
    }
}

impl From<SchemaError> for Error {
    fn from(e: SchemaError) -> Self {
        Error::ArgsInvalid(e.to_string())
    }
}

type SchemaResult<T> = std::result::Result<T, SchemaError>;

fn invalid<T>(msg: impl Into<String>) -> SchemaResult<T> {
    Err(SchemaError::Invalid(msg.into()))
}

struct Args<'a>(&'a Map<String, Value>);

impl<'a> Args<'a> {
    fn str(&self, key: &str) -> SchemaResult<&'a str> {
        match self.0.get(key).and_then(Value::as_str) {
            Some(s) => Ok(s),
            None => invalid(format!("param '{key}' must be a string")),
        }
    }

    fn opt_str(&self, key: &str) -> SchemaResult<Option<&'a str>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(_) => self.str(key).map(Some),
        }
    }

    fn strs(&self, key: &str) -> SchemaResult<Vec<&'a str>> {
        let items = self.0.get(key).and_then(Value::as_array);
        match items.map(|a| a.iter().map(Value::as_str).collect::<Option<Vec<_>>>()) {
            Some(Some(v)) if !v.is_empty() => Ok(v),
            _ => invalid(format!("param '{key}' must be a non-empty list of column names")),
        }
    }

    fn int(&self, key: &str) -> SchemaResult<i64> {
        match self.0.get(key).and_then(Value::as_i64) {
            Some(v) => Ok(v),
            None => invalid(format!("param '{key}' must be an integer")),
        }
    }
}

fn find<'c>(schema: &'c [Column], param: &str, name: &str) -> SchemaResult<(usize, &'c Column)> {
    schema
        .iter()
        .enumerate()
        .find(|(_, c)| c.name == name)
        .ok_or_else(|| SchemaError::UnknownColumn {
            param: param.to_string(),
            column: name.to_string(),
            available: schema.iter().map(|c| c.name.clone()).collect(),
        })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggOp {
    Sum,
    Avg,
    Min,
    Max,
    Count,
}

impl AggOp {
    pub fn parse(s: &str) -> Option<AggOp> {
        Some(match s {
            "sum" => AggOp::Sum,
            "avg" => AggOp::Avg,
            "min" => AggOp::Min,
            "max" => AggOp::Max,
            "count" => AggOp::Count,
            _ => return None,
        })
    }

    fn parse_arg(s: &str) -> SchemaResult<AggOp> {
        AggOp::parse(s).ok_or_else(|| SchemaError::Invalid(format!("unknown op '{s}'")))
    }

    /// Result type of applying the op to a column of type `ty`.
    pub fn result_type(self, ty: ColumnType) -> SchemaResult<ColumnType> {
        use ColumnType::*;
        match (self, ty) {
            (AggOp::Count, _) => Ok(Integer),
            (AggOp::Min | AggOp::Max, t) => Ok(t),
            (AggOp::Sum, Integer | Decimal | Currency) => Ok(ty),
            (AggOp::Avg, Integer) => Ok(Decimal),
            (AggOp::Avg, Decimal | Currency | Percent) => Ok(ty),
            _ => invalid(format!("cannot apply {self:?} to a {ty} column").to_lowercase()),
        }
    }

    fn output_name(self, column: &str) -> String {
        if self == AggOp::Count {
            "count".to_string()
        } else {
            column.to_string()
        }
    }
}

fn overflow() -> Error {
    Error::ArithmeticDomain("integer overflow".into())
}

/// Aggregates non-NA cells of type `ty`. Empty sums are zero; empty
/// avg/min/max are NotAvailable.
pub fn aggregate_cells<'c>(op: AggOp, ty: ColumnType, cells: impl Iterator<Item = &'c Cell>) -> Result<Cell> {
    let present: Vec<&Cell> = cells.filter(|c| !c.is_na()).collect();
    let n = present.len();
    let int_sum = |cells: &[&Cell]| -> Result<i64> {
        cells.iter().try_fold(0i64, |acc, c| match c {
            Cell::Integer(v) | Cell::Currency(v) => acc.checked_add(*v).ok_or_else(overflow),
            _ => Err(Error::ArgsInvalid("type mismatch in aggregation".into())),
        })
    };
    let float_sum = |cells: &[&Cell]| -> f64 { cells.iter().fold(0.0, |acc, c| acc + c.as_f64().unwrap_or(0.0)) };
    Ok(match op {
        AggOp::Count => Cell::Integer(n as i64),
        AggOp::Sum => match ty {
            ColumnType::Integer => Cell::Integer(int_sum(&present)?),
            ColumnType::Currency => Cell::Currency(int_sum(&present)?),
            ColumnType::Decimal => Cell::Decimal(float_sum(&present)),
            _ => return Err(Error::ArgsInvalid(format!("cannot sum a {ty} column"))),
        },
        AggOp::Avg if n == 0 => Cell::NotAvailable,
        AggOp::Avg => match ty {
            ColumnType::Integer => Cell::Decimal(int_sum(&present)? as f64 / n as f64),
            ColumnType::Currency => Cell::Currency((int_sum(&present)? as f64 / n as f64).round() as i64),
            ColumnType::Decimal => Cell::Decimal(float_sum(&present) / n as f64),
            ColumnType::Percent => Cell::Percent(float_sum(&present) / n as f64),
            _ => return Err(Error::ArgsInvalid(format!("cannot average a {ty} column"))),
        },
        AggOp::Min | AggOp::Max => {
            let mut best: Option<&Cell> = None;
            for c in present {
                best = match best {
                    None => Some(c),
                    Some(b) => {
                        let ord = c.compare(b).unwrap_or(std::cmp::Ordering::Equal);
                        let better = if op == AggOp::Min { ord.is_lt() } else { ord.is_gt() };
                        Some(if better { c } else { b })
                    }
                };
            }
            best.cloned().unwrap_or(Cell::NotAvailable)
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CmpOp {
    Eq,
    Ne,
    Gt,
    Ge,
    Lt,
    Le,
}

impl CmpOp {
    fn parse(s: &str) -> SchemaResult<CmpOp> {
        Ok(match s {
            "eq" => CmpOp::Eq,
            "ne" => CmpOp::Ne,
            "gt" => CmpOp::Gt,
            "ge" => CmpOp::Ge,
            "lt" => CmpOp::Lt,
            "le" => CmpOp::Le,
            _ => return invalid(format!("unknown comparison '{s}'")),
        })
    }

    fn holds(self, ord: std::cmp::Ordering) -> bool {
        match self {
            CmpOp::Eq => ord.is_eq(),
            CmpOp::Ne => !ord.is_eq(),
            CmpOp::Gt => ord.is_gt(),
            CmpOp::Ge => ord.is_ge(),
            CmpOp::Lt => ord.is_lt(),
            CmpOp::Le => ord.is_le(),
        }
    }
}

/// A filter literal interpreted against a column type. Currency literals
/// are dollars; percent literals are fractions.
pub fn parse_literal(v: &Value, ty: ColumnType) -> Option<Cell> {
    Some(match ty {
        ColumnType::Text => Cell::Text(v.as_str()?.to_string()),
        ColumnType::Integer => Cell::Integer(v.as_i64()?),
        ColumnType::Decimal => Cell::Decimal(v.as_f64()?),
        ColumnType::Percent => Cell::Percent(v.as_f64()?),
        ColumnType::Currency => {
            let dollars = v.as_f64()?;
            let cents = (dollars * 100.0).round();
            if !cents.is_finite() || cents.abs() > 9.0e15 {
                return None;
            }
            Cell::Currency(cents as i64)
        }
        ColumnType::Date => Cell::Date(NaiveDate::parse_from_str(v.as_str()?, "%Y-%m-%d").ok()?),
    })
}

pub fn bucket_start(d: NaiveDate, grain: &str) -> NaiveDate {
    if grain == "weekly" {
        d - Days::new(u64::from(d.weekday().num_days_from_monday()))
    } else {
        d.with_day(1).expect("day 1 exists")
    }
}

fn key_repr(cells: &[&Cell]) -> String {
    format!("{cells:?}")
}

/// Output schema of `name` applied to inputs with the given schemas.
/// Assumes `args` already passed the parameter type checks.
pub fn output_schema(name: &str, args: &Map<String, Value>, inputs: &[&[Column]]) -> SchemaResult<Vec<Column>> {
    if inputs.len() != input_count(name) {
        return invalid(format!("{name} takes {} input table(s), got {}", input_count(name), inputs.len()));
    }
    let a = Args(args);
    match name {
        "aggregate" => {
            let column = a.str("column")?;
            let op = AggOp::parse_arg(a.str("op")?)?;
            let (_, col) = find(inputs[0], "column", column)?;
            Ok(vec![Column::new(op.output_name(column), op.result_type(col.ty)?)])
        }
        "group_by" => {
            let keys = a.strs("keys")?;
            let column = a.str("column")?;
            let op = AggOp::parse_arg(a.str("op")?)?;
            let mut out = Vec::new();
            for k in &keys {
                let (_, c) = find(inputs[0], "keys", k)?;
                if out.iter().any(|o: &Column| o.name == c.name) {
                    return invalid(format!("key '{k}' listed twice"));
                }
                out.push(c.clone());
            }
            let (_, col) = find(inputs[0], "column", column)?;
            let out_name = op.output_name(column);
            if out.iter().any(|o| o.name == out_name) {
                return invalid(format!("column '{column}' is also a key"));
            }
            out.push(Column::new(out_name, op.result_type(col.ty)?));
            Ok(out)
        }
        "top_k" => {
            find(inputs[0], "by", a.str("by")?)?;
            if a.int("k")? < 1 {
                return invalid("k must be at least 1");
            }
            if let Some(o) = a.opt_str("order")? {
                if o != "asc" && o != "desc" {
                    return invalid(format!("unknown order '{o}'"));
                }
            }
            Ok(inputs[0].to_vec())
        }
        "filter" => {
            let (_, col) = find(inputs[0], "column", a.str("column")?)?;
            CmpOp::parse(a.str("op")?)?;
            let value = args.get("value").unwrap_or(&Value::Null);
            if parse_literal(value, col.ty).is_none() {
                return invalid(format!("value {value} is not a valid {} literal", col.ty));
            }
            Ok(inputs[0].to_vec())
        }
        "yoy_delta" => {
            let value = a.str("value")?;
            let (_, cur) = find(inputs[0], "value", value)?;
            let (_, prior) = find(inputs[1], "value", value)?;
            if cur.ty != prior.ty {
                return invalid(format!("column '{value}' has different types in the two inputs"));
            }
            if !cur.ty.is_numeric() {
                return invalid(format!("column '{value}' is not numeric"));
            }
            let mut out = Vec::new();
            if let Some(key) = a.opt_str("key")? {
                if key == value {
                    return invalid("key and value must differ");
                }
                let (_, kc) = find(inputs[0], "key", key)?;
                let (_, kp) = find(inputs[1], "key", key)?;
                if kc.ty != kp.ty {
                    return invalid(format!("key '{key}' has different types in the two inputs"));
                }
                out.push(kc.clone());
            }
            out.push(cur.clone());
            out.push(Column::new(format!("{value}_prior_year"), cur.ty));
            out.push(Column::new(format!("{value}_yoy_delta"), cur.ty));
            out.push(Column::new(format!("{value}_yoy_pct"), ColumnType::Percent));
            Ok(out)
        }
        "time_bucket" => {
            let (_, dc) = find(inputs[0], "column", a.str("column")?)?;
            if dc.ty != ColumnType::Date {
                return invalid(format!("column '{}' is not a date column", dc.name));
            }
            let grain = a.str("grain")?;
            if grain != "weekly" && grain != "monthly" {
                return invalid(format!("unknown grain '{grain}'"));
            }
            let op = match a.opt_str("op")? {
                None | Some("sum") => AggOp::Sum,
                Some("avg") => AggOp::Avg,
                Some(o) => return invalid(format!("unknown op '{o}'")),
            };
            let mut out = vec![Column::new("period", ColumnType::Date)];
            for v in a.strs("values")? {
                let (_, c) = find(inputs[0], "values", v)?;
                if out.iter().any(|o| o.name == c.name) {
                    return invalid(format!("value column '{v}' listed twice or named 'period'"));
                }
                out.push(Column::new(v, op.result_type(c.ty)?));
            }
            Ok(out)
        }
        other => invalid(format!("unknown function '{other}'")),
    }
}

/// Runs a built-in. Inputs are never modified.
pub fn apply(name: &str, args: &Map<String, Value>, inputs: &[&DataTable]) -> Result<DataTable> {
    let schemas: Vec<&[Column]> = inputs.iter().map(|t| t.columns()).collect();
    let out_cols = output_schema(name, args, &schemas)?;
    let a = Args(args);
    let t0 = inputs[0];
    let idx = |t: &DataTable, c: &str| t.column_index(c).expect("checked by schema pass");
    let rows: Vec<Vec<Cell>> = match name {
        "aggregate" => {
            let column = a.str("column")?;
            let op = AggOp::parse_arg(a.str("op")?)?;
            let i = idx(t0, column);
            let ty = t0.columns()[i].ty;
            vec![vec![aggregate_cells(op, ty, t0.rows().iter().map(|r| &r[i]))?]]
        }
        "group_by" => {
            let keys: Vec<usize> = a.strs("keys")?.iter().map(|k| idx(t0, k)).collect();
            let op = AggOp::parse_arg(a.str("op")?)?;
            let vi = idx(t0, a.str("column")?);
            let ty = t0.columns()[vi].ty;
            let mut order: Vec<Vec<usize>> = Vec::new();
            let mut slot: HashMap<String, usize> = HashMap::new();
            for (ri, row) in t0.rows().iter().enumerate() {
                let key: Vec<&Cell> = keys.iter().map(|&k| &row[k]).collect();
                let at = *slot.entry(key_repr(&key)).or_insert_with(|| {
                    order.push(Vec::new());
                    order.len() - 1
                });
                order[at].push(ri);
            }
            order
                .iter()
                .map(|members| {
                    let first = &t0.rows()[members[0]];
                    let mut out: Vec<Cell> = keys.iter().map(|&k| first[k].clone()).collect();
                    out.push(aggregate_cells(op, ty, members.iter().map(|&r| &t0.rows()[r][vi]))?);
                    Ok(out)
                })
                .collect::<Result<_>>()?
        }
        "top_k" => {
            let bi = idx(t0, a.str("by")?);
            let k = a.int("k")? as usize;
            let desc = a.opt_str("order")? != Some("asc");
            let mut order: Vec<usize> = (0..t0.len()).collect();
            let rows = t0.rows();
            order.sort_by(|&x, &y| {
                let primary = match (&rows[x][bi], &rows[y][bi]) {
                    (Cell::NotAvailable, Cell::NotAvailable) => std::cmp::Ordering::Equal,
                    (Cell::NotAvailable, _) => std::cmp::Ordering::Greater,
                    (_, Cell::NotAvailable) => std::cmp::Ordering::Less,
                    (p, q) => {
                        let o = p.compare(q).unwrap_or(std::cmp::Ordering::Equal);
                        if desc {
                            o.reverse()
                        } else {
                            o
                        }
                    }
                };
                primary.then_with(|| match (&rows[x][0], &rows[y][0]) {
                    (Cell::NotAvailable, Cell::NotAvailable) => std::cmp::Ordering::Equal,
                    (Cell::NotAvailable, _) => std::cmp::Ordering::Greater,
                    (_, Cell::NotAvailable) => std::cmp::Ordering::Less,
                    (p, q) => p.compare(q).unwrap_or(std::cmp::Ordering::Equal),
                })
            });
            order.into_iter().take(k).map(|i| rows[i].clone()).collect()
        }
        "filter" => {
            let ci = idx(t0, a.str("column")?);
            let op = CmpOp::parse(a.str("op")?)?;
            let lit = parse_literal(args.get("value").unwrap_or(&Value::Null), t0.columns()[ci].ty)
                .expect("checked by schema pass");
            t0.rows()
                .iter()
                .filter(|r| r[ci].compare(&lit).is_some_and(|o| op.holds(o)))
                .cloned()
                .collect()
        }
        "yoy_delta" => yoy_rows(&a, t0, inputs[1])?,
        "time_bucket" => {
            let di = idx(t0, a.str("column")?);
            let grain = a.str("grain")?;
            let op = if a.opt_str("op")? == Some("avg") { AggOp::Avg } else { AggOp::Sum };
            let vals: Vec<usize> = a.strs("values")?.iter().map(|v| idx(t0, v)).collect();
            let mut buckets: BTreeMap<NaiveDate, Vec<usize>> = BTreeMap::new();
            for (ri, row) in t0.rows().iter().enumerate() {
                if let Cell::Date(d) = row[di] {
                    buckets.entry(bucket_start(d, grain)).or_default().push(ri);
                }
            }
            buckets
                .into_iter()
                .map(|(period, members)| {
                    let mut out = vec![Cell::Date(period)];
                    for &vi in &vals {
                        let ty = t0.columns()[vi].ty;
                        out.push(aggregate_cells(op, ty, members.iter().map(|&r| &t0.rows()[r][vi]))?);
                    }
                    Ok(out)
                })
                .collect::<Result<_>>()?
        }
        other => return Err(Error::UnknownFunction(other.to_string())),
    };
    DataTable::new(out_cols, rows)
}

/// `(current - prior, (current - prior) / prior)`; the percent is
/// NotAvailable when prior is zero or either side is missing.
pub fn yoy(current: &Cell, prior: &Cell) -> Result<(Cell, Cell)> {
    let delta = match (current, prior) {
        (Cell::Integer(c), Cell::Integer(p)) => Cell::Integer(c.checked_sub(*p).ok_or_else(overflow)?),
        (Cell::Currency(c), Cell::Currency(p)) => Cell::Currency(c.checked_sub(*p).ok_or_else(overflow)?),
        (Cell::Decimal(c), Cell::Decimal(p)) => Cell::Decimal(c - p),
        (Cell::Percent(c), Cell::Percent(p)) => Cell::Percent(c - p),
        _ => return Ok((Cell::NotAvailable, Cell::NotAvailable)),
    };
    let base = prior.as_f64().unwrap_or(0.0);
    let pct = if base == 0.0 {
        Cell::NotAvailable
    } else {
        Cell::Percent(delta.as_f64().unwrap_or(0.0) / base)
    };
    Ok((delta, pct))
}

fn yoy_rows(a: &Args<'_>, cur: &DataTable, prior: &DataTable) -> Result<Vec<Vec<Cell>>> {
    let value = a.str("value")?;
    let vc = cur.column_index(value).expect("checked");
    let vp = prior.column_index(value).expect("checked");
    let key = a.opt_str("key")?;
    let mut out = Vec::with_capacity(cur.len());
    match key {
        Some(key) => {
            let kc = cur.column_index(key).expect("checked");
            let kp = prior.column_index(key).expect("checked");
            let mut lookup: HashMap<String, usize> = HashMap::new();
            for (i, row) in prior.rows().iter().enumerate() {
                lookup.entry(key_repr(&[&row[kp]])).or_insert(i);
            }
            for row in cur.rows() {
                let probe = match &row[kc] {
                    Cell::Date(d) => Cell::Date(minus_one_year(*d)),
                    other => other.clone(),
                };
                let prior_val = match (&probe, lookup.get(&key_repr(&[&probe]))) {
                    (Cell::NotAvailable, _) | (_, None) => Cell::NotAvailable,
                    (_, Some(&i)) => prior.rows()[i][vp].clone(),
                };
                let (delta, pct) = yoy(&row[vc], &prior_val)?;
                out.push(vec![row[kc].clone(), row[vc].clone(), prior_val, delta, pct]);
            }
        }
        None => {
            for (i, row) in cur.rows().iter().enumerate() {
                let prior_val = prior.rows().get(i).map_or(Cell::NotAvailable, |r| r[vp].clone());
                let (delta, pct) = yoy(&row[vc], &prior_val)?;
                out.push(vec![row[vc].clone(), prior_val, delta, pct]);
            }
        }
    }
    Ok(out)
}
