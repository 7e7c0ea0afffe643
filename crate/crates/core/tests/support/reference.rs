//! Naive full-scan reference implementations of the dataplane APIs and
//! functions, and seeded random payload generators for equivalence checks.

use std::cmp::Ordering;

use chrono::{Datelike, Duration, NaiveDate};
use insight_core::dataplane::{Cell, Column, ColumnType, DataTable, SellerStore};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

type Ref = Result<DataTable, ()>;

fn col(name: &str, ty: ColumnType) -> Column {
    Column::new(name, ty)
}

fn date(v: Option<&Value>) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(v?.as_str()?, "%Y-%m-%d").ok()
}

#[derive(Default, Clone, Copy)]
struct Acc {
    cents: i64,
    units: i64,
    views: i64,
}

impl Acc {
    fn cell(&self, metric: &str) -> Cell {
        match metric {
            "sales" => Cell::Currency(self.cents),
            "units" => Cell::Integer(self.units),
            "page_views" => Cell::Integer(self.views),
            "conversion" if self.views > 0 => Cell::Percent(self.units as f64 / self.views as f64),
            "average_selling_price" if self.units > 0 => Cell::Currency((2 * self.cents + self.units) / (2 * self.units)),
            _ => Cell::NotAvailable,
        }
    }
}

const FACT_APIS: [(&str, &str, &[(&str, ColumnType)]); 5] = [
    ("get_sales_by_product", "product", &[("product_id", ColumnType::Text), ("sales", ColumnType::Currency)]),
    (
        "get_traffic_by_product",
        "product",
        &[("product_id", ColumnType::Text), ("page_views", ColumnType::Integer), ("conversion", ColumnType::Percent)],
    ),
    (
        "get_product_performance",
        "product",
        &[
            ("product_id", ColumnType::Text),
            ("sales", ColumnType::Currency),
            ("units", ColumnType::Integer),
            ("page_views", ColumnType::Integer),
            ("conversion", ColumnType::Percent),
            ("average_selling_price", ColumnType::Currency),
        ],
    ),
    (
        "get_daily_totals",
        "date",
        &[
            ("date", ColumnType::Date),
            ("sales", ColumnType::Currency),
            ("units", ColumnType::Integer),
            ("page_views", ColumnType::Integer),
            ("conversion", ColumnType::Percent),
        ],
    ),
    (
        "get_monthly_totals",
        "month",
        &[
            ("month", ColumnType::Date),
            ("sales", ColumnType::Currency),
            ("units", ColumnType::Integer),
            ("page_views", ColumnType::Integer),
            ("conversion", ColumnType::Percent),
            ("average_selling_price", ColumnType::Currency),
        ],
    ),
];

pub const API_NAMES: [&str; 6] = [
    "get_sales_by_product",
    "get_traffic_by_product",
    "get_product_performance",
    "get_daily_totals",
    "get_monthly_totals",
    "get_benchmarks",
];

pub fn api(store: &SellerStore, seller: &str, name: &str, payload: &Map<String, Value>) -> Ref {
    if name == "get_benchmarks" {
        let known = ["conversion", "average_selling_price", "daily_page_views_per_product"];
        if payload.keys().any(|k| k != "metric") {
            return Err(());
        }
        let wanted = match payload.get("metric") {
            None => None,
            Some(Value::String(m)) if known.contains(&m.as_str()) => Some(m.clone()),
            Some(_) => return Err(()),
        };
        let rows = store
            .benchmarks()
            .iter()
            .filter(|b| wanted.as_ref().is_none_or(|m| *m == b.metric))
            .map(|b| vec![Cell::Text(b.metric.clone()), Cell::Decimal(b.peer_value)])
            .collect();
        return DataTable::new(vec![col("metric", ColumnType::Text), col("peer_value", ColumnType::Decimal)], rows).map_err(|_| ());
    }
    let (_, grouping, columns) = FACT_APIS.iter().find(|(n, _, _)| *n == name).ok_or(())?;
    if payload.keys().any(|k| k != "start_date" && k != "end_date") {
        return Err(());
    }
    let (start, end) = (date(payload.get("start_date")).ok_or(())?, date(payload.get("end_date")).ok_or(())?);
    if start > end {
        return Err(());
    }
    // Group keys in first-seen order, sorted at the end.
    let mut groups: Vec<(Cell, Acc)> = Vec::new();
    for f in store.facts() {
        if f.seller_id != seller || f.date < start || f.date > end {
            continue;
        }
        let key = match *grouping {
            "product" => Cell::Text(f.product_id.clone()),
            "date" => Cell::Date(f.date),
            _ => Cell::Date(NaiveDate::from_ymd_opt(f.date.year(), f.date.month(), 1).unwrap()),
        };
        let pos = match groups.iter().position(|(k, _)| *k == key) {
            Some(p) => p,
            None => {
                groups.push((key, Acc::default()));
                groups.len() - 1
            }
        };
        let a = &mut groups[pos].1;
        a.cents += f.sales_cents;
        a.units += f.units;
        a.views += f.page_views;
    }
    groups.sort_by(|a, b| cmp(&a.0, &b.0));
    let rows = groups
        .into_iter()
        .map(|(k, acc)| {
            let mut row = vec![k];
            row.extend(columns[1..].iter().map(|(m, _)| acc.cell(m)));
            row
        })
        .collect();
    DataTable::new(columns.iter().map(|(n, t)| col(n, *t)).collect(), rows).map_err(|_| ())
}

/// Order among same-typed, non-NA cells.
fn cmp(a: &Cell, b: &Cell) -> Ordering {
    match (a, b) {
        (Cell::Text(x), Cell::Text(y)) => x.cmp(y),
        (Cell::Date(x), Cell::Date(y)) => x.cmp(y),
        (Cell::Integer(x), Cell::Integer(y)) | (Cell::Currency(x), Cell::Currency(y)) => x.cmp(y),
        (Cell::Decimal(x), Cell::Decimal(y)) | (Cell::Percent(x), Cell::Percent(y)) => x.total_cmp(y),
        _ => panic!("incomparable cells {a:?} {b:?}"),
    }
}

/// NA sorts after everything.
fn cmp_na_last(a: &Cell, b: &Cell) -> Ordering {
    match (a.is_na(), b.is_na()) {
        (true, true) => Ordering::Equal,
        (true, false) => Ordering::Greater,
        (false, true) => Ordering::Less,
        _ => cmp(a, b),
    }
}

fn index(t: &DataTable, name: &str) -> Result<usize, ()> {
    t.columns().iter().position(|c| c.name == name).ok_or(())
}

fn s<'a>(args: &'a Map<String, Value>, k: &str) -> Result<&'a str, ()> {
    args.get(k).and_then(Value::as_str).ok_or(())
}

fn agg_type(op: &str, ty: ColumnType) -> Result<ColumnType, ()> {
    use ColumnType::*;
    match (op, ty) {
        ("count", _) => Ok(Integer),
        ("min" | "max", t) => Ok(t),
        ("sum", Integer | Decimal | Currency) => Ok(ty),
        ("avg", Integer) => Ok(Decimal),
        ("avg", Decimal | Currency | Percent) => Ok(ty),
        _ => Err(()),
    }
}

fn agg(op: &str, ty: ColumnType, cells: &[&Cell]) -> Cell {
    let xs: Vec<&Cell> = cells.iter().copied().filter(|c| !c.is_na()).collect();
    let isum = || xs.iter().map(|c| match c {
        Cell::Integer(v) | Cell::Currency(v) => *v,
        _ => unreachable!(),
    });
    let fsum = || {
        let mut acc = 0.0;
        for c in &xs {
            acc += match c {
                Cell::Decimal(v) | Cell::Percent(v) => *v,
                Cell::Integer(v) | Cell::Currency(v) => *v as f64,
                _ => unreachable!(),
            };
        }
        acc
    };
    let n = xs.len();
    match op {
        "count" => Cell::Integer(n as i64),
        "sum" => match ty {
            ColumnType::Integer => Cell::Integer(isum().sum()),
            ColumnType::Currency => Cell::Currency(isum().sum()),
            _ => Cell::Decimal(fsum()),
        },
        _ if n == 0 => Cell::NotAvailable,
        "avg" => match ty {
            ColumnType::Integer => Cell::Decimal(isum().sum::<i64>() as f64 / n as f64),
            ColumnType::Currency => Cell::Currency((isum().sum::<i64>() as f64 / n as f64).round() as i64),
            ColumnType::Decimal => Cell::Decimal(fsum() / n as f64),
            _ => Cell::Percent(fsum() / n as f64),
        },
        "min" | "max" => {
            let mut best = xs[0];
            for c in &xs[1..] {
                let o = cmp(c, best);
                if (op == "min" && o == Ordering::Less) || (op == "max" && o == Ordering::Greater) {
                    best = c;
                }
            }
            best.clone()
        }
        _ => unreachable!(),
    }
}

fn literal(v: &Value, ty: ColumnType) -> Option<Cell> {
    match ty {
        ColumnType::Text => v.as_str().map(|s| Cell::Text(s.to_string())),
        ColumnType::Integer => v.as_i64().map(Cell::Integer),
        ColumnType::Decimal => v.as_f64().map(Cell::Decimal),
        ColumnType::Percent => v.as_f64().map(Cell::Percent),
        ColumnType::Currency => v.as_f64().map(|d| Cell::Currency((d * 100.0).round() as i64)),
        ColumnType::Date => v.as_str().and_then(|s| s.parse().ok()).map(Cell::Date),
    }
}

fn year_before(d: NaiveDate) -> NaiveDate {
    NaiveDate::from_ymd_opt(d.year() - 1, d.month(), d.day())
        .unwrap_or_else(|| NaiveDate::from_ymd_opt(d.year() - 1, d.month(), 28).unwrap())
}

fn yoy(cur: &Cell, prior: &Cell) -> (Cell, Cell) {
    let delta = match (cur, prior) {
        (Cell::Integer(c), Cell::Integer(p)) => Cell::Integer(c - p),
        (Cell::Currency(c), Cell::Currency(p)) => Cell::Currency(c - p),
        (Cell::Decimal(c), Cell::Decimal(p)) => Cell::Decimal(c - p),
        (Cell::Percent(c), Cell::Percent(p)) => Cell::Percent(c - p),
        _ => return (Cell::NotAvailable, Cell::NotAvailable),
    };
    let num = |c: &Cell| match c {
        Cell::Integer(v) | Cell::Currency(v) => *v as f64,
        Cell::Decimal(v) | Cell::Percent(v) => *v,
        _ => 0.0,
    };
    let base = num(prior);
    let pct = if base == 0.0 { Cell::NotAvailable } else { Cell::Percent(num(&delta) / base) };
    (delta, pct)
}

fn is_numeric(ty: ColumnType) -> bool {
    !matches!(ty, ColumnType::Text | ColumnType::Date)
}

/// Reference semantics for the built-in functions.
pub fn function(name: &str, args: &Map<String, Value>, inputs: &[&DataTable]) -> Ref {
    let arity = if name == "yoy_delta" { 2 } else { 1 };
    if inputs.len() != arity {
        return Err(());
    }
    let t = inputs[0];
    let ty = |i: usize| t.columns()[i].ty;
    let (columns, rows): (Vec<Column>, Vec<Vec<Cell>>) = match name {
        "aggregate" => {
            let c = index(t, s(args, "column")?)?;
            let op = s(args, "op")?;
            let out_ty = agg_type(op, ty(c))?;
            let out_name = if op == "count" { "count".to_string() } else { t.columns()[c].name.clone() };
            let cells: Vec<&Cell> = t.rows().iter().map(|r| &r[c]).collect();
            (vec![col(&out_name, out_ty)], vec![vec![agg(op, ty(c), &cells)]])
        }
        "group_by" => {
            let keys: Vec<usize> = args
                .get("keys")
                .and_then(Value::as_array)
                .ok_or(())?
                .iter()
                .map(|k| k.as_str().ok_or(()).and_then(|k| index(t, k)))
                .collect::<Result<_, _>>()?;
            if keys.is_empty() {
                return Err(());
            }
            let mut uniq = keys.clone();
            uniq.sort();
            uniq.dedup();
            if uniq.len() != keys.len() {
                return Err(());
            }
            let c = index(t, s(args, "column")?)?;
            let op = s(args, "op")?;
            let out_ty = agg_type(op, ty(c))?;
            let out_name = if op == "count" { "count".to_string() } else { t.columns()[c].name.clone() };
            if keys.iter().any(|&k| t.columns()[k].name == out_name) {
                return Err(());
            }
            let mut groups: Vec<(Vec<Cell>, Vec<usize>)> = Vec::new();
            for (i, r) in t.rows().iter().enumerate() {
                let key: Vec<Cell> = keys.iter().map(|&k| r[k].clone()).collect();
                match groups.iter_mut().find(|(g, _)| *g == key) {
                    Some((_, members)) => members.push(i),
                    None => groups.push((key, vec![i])),
                }
            }
            let mut cols: Vec<Column> = keys.iter().map(|&k| t.columns()[k].clone()).collect();
            cols.push(col(&out_name, out_ty));
            let rows = groups
                .into_iter()
                .map(|(mut key, members)| {
                    let cells: Vec<&Cell> = members.iter().map(|&i| &t.rows()[i][c]).collect();
                    key.push(agg(op, ty(c), &cells));
                    key
                })
                .collect();
            (cols, rows)
        }
        "top_k" => {
            let by = index(t, s(args, "by")?)?;
            let k = args.get("k").and_then(Value::as_i64).ok_or(())?;
            if k < 1 {
                return Err(());
            }
            let desc = match args.get("order") {
                None => true,
                Some(Value::String(o)) if o == "desc" => true,
                Some(Value::String(o)) if o == "asc" => false,
                Some(_) => return Err(()),
            };
            let mut idx: Vec<usize> = (0..t.len()).collect();
            // Insertion sort keeps equal rows in input order.
            for i in 1..idx.len() {
                let mut j = i;
                while j > 0 {
                    let (a, b) = (&t.rows()[idx[j - 1]], &t.rows()[idx[j]]);
                    let primary = match (a[by].is_na(), b[by].is_na()) {
                        (false, false) if desc => cmp(&a[by], &b[by]).reverse(),
                        _ => cmp_na_last(&a[by], &b[by]),
                    };
                    if primary.then_with(|| cmp_na_last(&a[0], &b[0])) == Ordering::Greater {
                        idx.swap(j - 1, j);
                        j -= 1;
                    } else {
                        break;
                    }
                }
            }
            let rows = idx.into_iter().take(k as usize).map(|i| t.rows()[i].clone()).collect();
            (t.columns().to_vec(), rows)
        }
        "filter" => {
            let c = index(t, s(args, "column")?)?;
            let op = s(args, "op")?;
            if !["eq", "ne", "gt", "ge", "lt", "le"].contains(&op) {
                return Err(());
            }
            let lit = literal(args.get("value").ok_or(())?, ty(c)).ok_or(())?;
            let rows = t
                .rows()
                .iter()
                .filter(|r| {
                    if r[c].is_na() {
                        return false;
                    }
                    let o = cmp(&r[c], &lit);
                    match op {
                        "eq" => o == Ordering::Equal,
                        "ne" => o != Ordering::Equal,
                        "gt" => o == Ordering::Greater,
                        "ge" => o != Ordering::Less,
                        "lt" => o == Ordering::Less,
                        _ => o != Ordering::Greater,
                    }
                })
                .cloned()
                .collect();
            (t.columns().to_vec(), rows)
        }
        "yoy_delta" => {
            let p = inputs[1];
            let value = s(args, "value")?;
            let (vc, vp) = (index(t, value)?, index(p, value)?);
            let vty = ty(vc);
            if vty != p.columns()[vp].ty || !is_numeric(vty) {
                return Err(());
            }
            let key = match args.get("key") {
                None => None,
                Some(Value::String(k)) if k != value => {
                    let (kc, kp) = (index(t, k)?, index(p, k)?);
                    if ty(kc) != p.columns()[kp].ty {
                        return Err(());
                    }
                    Some((kc, kp))
                }
                Some(_) => return Err(()),
            };
            let mut cols = Vec::new();
            if let Some((kc, _)) = key {
                cols.push(t.columns()[kc].clone());
            }
            cols.push(col(value, vty));
            cols.push(col(&format!("{value}_prior_year"), vty));
            cols.push(col(&format!("{value}_yoy_delta"), vty));
            cols.push(col(&format!("{value}_yoy_pct"), ColumnType::Percent));
            let mut rows = Vec::new();
            for (i, r) in t.rows().iter().enumerate() {
                let prior = match key {
                    Some((kc, kp)) => {
                        let probe = match &r[kc] {
                            Cell::Date(d) => Cell::Date(year_before(*d)),
                            other => other.clone(),
                        };
                        if probe.is_na() {
                            Cell::NotAvailable
                        } else {
                            p.rows().iter().find(|pr| pr[kp] == probe).map_or(Cell::NotAvailable, |pr| pr[vp].clone())
                        }
                    }
                    None => p.rows().get(i).map_or(Cell::NotAvailable, |pr| pr[vp].clone()),
                };
                let (d, pct) = yoy(&r[vc], &prior);
                let mut row = Vec::new();
                if let Some((kc, _)) = key {
                    row.push(r[kc].clone());
                }
                row.extend([r[vc].clone(), prior, d, pct]);
                rows.push(row);
            }
            (cols, rows)
        }
        "time_bucket" => {
            let dc = index(t, s(args, "column")?)?;
            if ty(dc) != ColumnType::Date {
                return Err(());
            }
            let grain = s(args, "grain")?;
            if grain != "weekly" && grain != "monthly" {
                return Err(());
            }
            let op = match args.get("op") {
                None => "sum",
                Some(Value::String(o)) if o == "sum" || o == "avg" => o.as_str(),
                Some(_) => return Err(()),
            };
            let names: Vec<&str> = args
                .get("values")
                .and_then(Value::as_array)
                .ok_or(())?
                .iter()
                .map(|v| v.as_str().ok_or(()))
                .collect::<Result<_, _>>()?;
            if names.is_empty() {
                return Err(());
            }
            let mut cols = vec![col("period", ColumnType::Date)];
            let mut vals = Vec::new();
            for n in names {
                let i = index(t, n)?;
                if cols.iter().any(|c| c.name == n) {
                    return Err(());
                }
                cols.push(col(n, agg_type(op, ty(i))?));
                vals.push(i);
            }
            let start = |d: NaiveDate| {
                if grain == "weekly" {
                    d - Duration::days(d.weekday().num_days_from_monday() as i64)
                } else {
                    NaiveDate::from_ymd_opt(d.year(), d.month(), 1).unwrap()
                }
            };
            let mut periods: Vec<NaiveDate> = t
                .rows()
                .iter()
                .filter_map(|r| match r[dc] {
                    Cell::Date(d) => Some(start(d)),
                    _ => None,
                })
                .collect();
            periods.sort();
            periods.dedup();
            let rows = periods
                .into_iter()
                .map(|p| {
                    let members: Vec<&Vec<Cell>> = t
                        .rows()
                        .iter()
                        .filter(|r| matches!(r[dc], Cell::Date(d) if start(d) == p))
                        .collect();
                    let mut row = vec![Cell::Date(p)];
                    for &v in &vals {
                        let cells: Vec<&Cell> = members.iter().map(|r| &r[v]).collect();
                        row.push(agg(op, ty(v), &cells));
                    }
                    row
                })
                .collect();
            (cols, rows)
        }
        _ => return Err(()),
    };
    DataTable::new(columns, rows).map_err(|_| ())
}

pub const FUNCTION_NAMES: [&str; 6] = ["aggregate", "group_by", "top_k", "filter", "yoy_delta", "time_bucket"];

fn random_date(rng: &mut ChaCha8Rng) -> NaiveDate {
    let base = NaiveDate::from_ymd_opt(2022, 11, 1).unwrap();
    base + Duration::days(rng.gen_range(0..760))
}

/// A random payload for `api`; roughly one in ten is invalid.
pub fn random_api_payload(rng: &mut ChaCha8Rng, api: &str) -> Map<String, Value> {
    let v = if api == "get_benchmarks" {
        match rng.gen_range(0..5) {
            0 => json!({}),
            1 => json!({"metric": "conversion"}),
            2 => json!({"metric": "average_selling_price"}),
            3 => json!({"metric": "daily_page_views_per_product"}),
            _ => json!({"metric": "weather"}),
        }
    } else {
        let a = random_date(rng);
        let b = a + Duration::days(rng.gen_range(0..200));
        match rng.gen_range(0..20) {
            0 => json!({"start_date": b.to_string(), "end_date": (a - Duration::days(1)).to_string()}),
            1 => json!({"start_date": a.to_string()}),
            2 => json!({"start_date": "2024-13-01", "end_date": b.to_string()}),
            _ => json!({"start_date": a.to_string(), "end_date": b.to_string()}),
        }
    };
    v.as_object().unwrap().clone()
}

/// A typed table with repeated keys and missing values.
pub fn random_table(rng: &mut ChaCha8Rng) -> DataTable {
    let n = rng.gen_range(0..40);
    let regions = ["north", "south", "east", "west"];
    let start = random_date(rng);
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let na = |rng: &mut ChaCha8Rng| rng.gen_bool(0.1);
        rows.push(vec![
            if na(rng) { Cell::NotAvailable } else { Cell::Text(regions.choose(rng).unwrap().to_string()) },
            if na(rng) { Cell::NotAvailable } else { Cell::Date(start + Duration::days(rng.gen_range(0..90))) },
            if na(rng) { Cell::NotAvailable } else { Cell::Integer(rng.gen_range(-50..500)) },
            if na(rng) { Cell::NotAvailable } else { Cell::Currency(rng.gen_range(0..2_000_000)) },
            if na(rng) { Cell::NotAvailable } else { Cell::Percent(rng.gen_range(0..10_000) as f64 / 10_000.0) },
            if na(rng) { Cell::NotAvailable } else { Cell::Decimal(rng.gen_range(-1000.0..1000.0)) },
        ]);
    }
    DataTable::new(
        vec![
            col("region", ColumnType::Text),
            col("day", ColumnType::Date),
            col("units", ColumnType::Integer),
            col("sales", ColumnType::Currency),
            col("rate", ColumnType::Percent),
            col("score", ColumnType::Decimal),
        ],
        rows,
    )
    .unwrap()
}

fn pick<'a>(rng: &mut ChaCha8Rng, xs: &[&'a str]) -> &'a str {
    xs[rng.gen_range(0..xs.len())]
}

fn literal_for(rng: &mut ChaCha8Rng, t: &DataTable, c: usize) -> Value {
    let present: Vec<&Cell> = t.rows().iter().map(|r| &r[c]).filter(|x| !x.is_na()).collect();
    if let Some(cell) = present.choose(rng).filter(|_| rng.gen_bool(0.7)) {
        return match cell {
            Cell::Currency(v) => json!(*v as f64 / 100.0),
            other => other.to_json(),
        };
    }
    match t.columns()[c].ty {
        ColumnType::Text => json!(pick(rng, &["north", "zzz", "P007", ""])),
        ColumnType::Date => json!(random_date(rng).to_string()),
        ColumnType::Integer => json!(rng.gen_range(-10..600)),
        _ => json!(rng.gen_range(-5.0..20_000.0)),
    }
}

/// A random call of `function`: its arguments and input tables. Around one
/// in ten is invalid so error parity is exercised too.
pub fn random_call(rng: &mut ChaCha8Rng, function: &str, apis: &mut dyn FnMut(&str, Map<String, Value>) -> DataTable) -> (Map<String, Value>, Vec<DataTable>) {
    let ops = ["sum", "avg", "min", "max", "count", "median"];
    let period = |rng: &mut ChaCha8Rng| {
        let a = NaiveDate::from_ymd_opt(2024, 1, 1).unwrap() + Duration::days(rng.gen_range(0..200));
        let b = a + Duration::days(rng.gen_range(0..90));
        (a, b)
    };
    let t = if rng.gen_bool(0.6) {
        random_table(rng)
    } else {
        let api = pick(rng, &["get_daily_totals", "get_product_performance", "get_monthly_totals"]);
        let (a, b) = period(rng);
        apis(api, json!({"start_date": a.to_string(), "end_date": b.to_string()}).as_object().unwrap().clone())
    };
    let names: Vec<String> = t.columns().iter().map(|c| c.name.clone()).collect();
    let name = |rng: &mut ChaCha8Rng| -> String {
        if rng.gen_bool(0.05) {
            "revenue".to_string()
        } else {
            names.choose(rng).unwrap().clone()
        }
    };
    let args = match function {
        "aggregate" => json!({"column": name(rng), "op": pick(rng, &ops)}),
        "group_by" => {
            let mut keys: Vec<String> = { let k = rng.gen_range(1..=2); names.choose_multiple(rng, k) }.cloned().collect();
            if rng.gen_bool(0.05) {
                keys.push(keys[0].clone());
            }
            json!({"keys": keys, "column": name(rng), "op": pick(rng, &ops)})
        }
        "top_k" => {
            let mut v = json!({"by": name(rng), "k": rng.gen_range(-1..15)});
            match rng.gen_range(0..4) {
                0 => v["order"] = json!("asc"),
                1 => v["order"] = json!("desc"),
                2 if rng.gen_bool(0.2) => v["order"] = json!("random"),
                _ => {}
            }
            v
        }
        "filter" => {
            let c = rng.gen_range(0..names.len());
            let op = pick(rng, &["eq", "ne", "gt", "ge", "lt", "le", "like"]);
            json!({"column": names[c], "op": op, "value": literal_for(rng, &t, c)})
        }
        "yoy_delta" => {
            let (a, b) = period(rng);
            let payload = |x: NaiveDate, y: NaiveDate| json!({"start_date": x.to_string(), "end_date": y.to_string()}).as_object().unwrap().clone();
            let api = pick(rng, &["get_monthly_totals", "get_daily_totals", "get_product_performance"]);
            let cur = apis(api, payload(a, b));
            let prior = apis(api, payload(year_before(a), year_before(b)));
            let key = cur.columns()[0].name.clone();
            let value = pick(rng, &["sales", "units", "page_views", "conversion", key.as_str()]).to_string();
            let mut args = json!({"value": value});
            if rng.gen_bool(0.7) {
                args["key"] = json!(key);
            }
            return (args.as_object().unwrap().clone(), vec![cur, prior]);
        }
        "time_bucket" => {
            let date_col = names.iter().find(|n| *n == "day" || *n == "date" || *n == "month").cloned().unwrap_or_else(|| names[0].clone());
            let numeric: Vec<String> = t
                .columns()
                .iter()
                .filter(|c| is_numeric(c.ty))
                .map(|c| c.name.clone())
                .collect();
            let values: Vec<String> = { let k = rng.gen_range(1..=numeric.len().max(1)); numeric.choose_multiple(rng, k) }.cloned().collect();
            let mut v = json!({"column": date_col, "grain": pick(rng, &["weekly", "monthly", "monthly", "daily"]), "values": values});
            match rng.gen_range(0..3) {
                0 => v["op"] = json!("avg"),
                1 => v["op"] = json!("sum"),
                _ => {}
            }
            v
        }
        _ => unreachable!(),
    };
    (args.as_object().unwrap().clone(), vec![t])
}
