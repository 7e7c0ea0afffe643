use std::collections::BTreeMap;

use chrono::{Datelike, NaiveDate};
use serde_json::{Map, Value};

use super::registry::{check_payload, ApiSpec, Dataset, GroupKey, Registry};
use super::store::{FactRow, SellerStore};
use super::table::{Cell, DataTable};
use crate::error::{Error, Result};
use crate::manager::temporal::DateRange;

#[derive(Default)]
struct Totals {
    cents: i64,
    units: i64,
    views: i64,
}

impl Totals {
    fn add(&mut self, f: &FactRow) -> Result<()> {
        let of = || Error::ArithmeticDomain("sales total overflow".into());
        self.cents = self.cents.checked_add(f.sales_cents).ok_or_else(of)?;
        self.units = self.units.checked_add(f.units).ok_or_else(of)?;
        self.views = self.views.checked_add(f.page_views).ok_or_else(of)?;
        Ok(())
    }

    fn cell(&self, column: &str) -> Cell {
        match column {
            "sales" => Cell::Currency(self.cents),
            "units" => Cell::Integer(self.units),
            "page_views" => Cell::Integer(self.views),
            "conversion" if self.views > 0 => Cell::Percent(self.units as f64 / self.views as f64),
            "average_selling_price" if self.units > 0 => {
                Cell::Currency((self.cents as f64 / self.units as f64).round() as i64)
            }
            _ => Cell::NotAvailable,
        }
    }
}

fn date_param(payload: &Map<String, Value>, key: &str) -> Result<NaiveDate> {
    payload
        .get(key)
        .and_then(Value::as_str)
        .and_then(|s| NaiveDate::parse_from_str(s, "%Y-%m-%d").ok())
        .ok_or_else(|| Error::PayloadInvalid(format!("missing or invalid '{key}'")))
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Key {
    Text(String),
    Date(NaiveDate),
}

/// Invokes a registered API for one seller. The seller id comes from the
/// request context, never from the payload. An empty result is a valid,
/// empty table.
pub fn invoke_api(
    registry: &Registry,
    store: &SellerStore,
    seller_id: &str,
    name: &str,
    payload: &Map<String, Value>,
) -> Result<DataTable> {
    let spec = registry.api(name).ok_or_else(|| Error::UnknownApi(name.to_string()))?;
    let problems = check_payload(&spec.params, payload);
    if !problems.is_empty() {
        return Err(Error::PayloadInvalid(format!("{name}: {}", problems.join("; "))));
    }
    match spec.source.dataset {
        Dataset::Facts => facts_api(spec, store, seller_id, payload),
        Dataset::Benchmarks => {
            let wanted = payload.get("metric").and_then(Value::as_str);
            let rows = store
                .benchmarks()
                .iter()
                .filter(|b| wanted.is_none_or(|m| m == b.metric))
                .map(|b| {
                    spec.output_columns
                        .iter()
                        .map(|c| match c.name.as_str() {
                            "metric" => Cell::Text(b.metric.clone()),
                            "peer_value" => Cell::Decimal(b.peer_value),
                            _ => Cell::NotAvailable,
                        })
                        .collect()
                })
                .collect();
            DataTable::new(spec.schema(), rows)
        }
    }
}

fn facts_api(spec: &ApiSpec, store: &SellerStore, seller_id: &str, payload: &Map<String, Value>) -> Result<DataTable> {
    let start = date_param(payload, "start_date")?;
    let end = date_param(payload, "end_date")?;
    let range = DateRange::new(start, end).ok_or_else(|| Error::PayloadInvalid("start_date is after end_date".into()))?;
    let mut groups: BTreeMap<Key, Totals> = BTreeMap::new();
    for f in store.facts_in(seller_id, &range) {
        let key = match spec.source.group_by {
            GroupKey::ProductId => Key::Text(f.product_id.clone()),
            GroupKey::Date => Key::Date(f.date),
            GroupKey::Month => Key::Date(f.date.with_day(1).expect("day 1 exists")),
            GroupKey::Metric => return Err(Error::Config(format!("{}: facts cannot be grouped by metric", spec.name))),
        };
        groups.entry(key).or_default().add(f)?;
    }
    let key_col = spec.source.group_by.column();
    let rows = groups
        .into_iter()
        .map(|(key, totals)| {
            spec.output_columns
                .iter()
                .map(|c| {
                    if c.name == key_col {
                        match &key {
                            Key::Text(s) => Cell::Text(s.clone()),
                            Key::Date(d) => Cell::Date(*d),
                        }
                    } else {
                        totals.cell(&c.name)
                    }
                })
                .collect()
        })
        .collect();
    DataTable::new(spec.schema(), rows)
}
