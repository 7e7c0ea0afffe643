//! Per-seller daily facts and peer benchmarks, generated or loaded from CSV.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::f64::consts::PI;
use std::path::Path;

use chrono::{Datelike, Days, NaiveDate, Weekday};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manager::temporal::DateRange;
use crate::rng::seeded_rng;

pub const DEFAULT_SELLER: &str = "seller-001";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactRow {
    pub seller_id: String,
    pub product_id: String,
    pub date: NaiveDate,
    pub sales_cents: i64,
    pub units: i64,
    pub page_views: i64,
    /// units / page_views in basis points.
    pub conversion_bp: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub metric: String,
    pub peer_value: f64,
}

/// Immutable fact store. Facts are kept sorted by (seller, date, product) so
/// a seller's date range is a contiguous slice.
#[derive(Debug, Clone, PartialEq)]
pub struct SellerStore {
    facts: Vec<FactRow>,
    benchmarks: Vec<BenchmarkRow>,
    sellers: HashMap<String, (usize, usize)>,
}

impl SellerStore {
    pub fn new(mut facts: Vec<FactRow>, benchmarks: Vec<BenchmarkRow>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(facts.len());
        for f in &facts {
            if !seen.insert((f.seller_id.as_str(), f.product_id.as_str(), f.date)) {
                return Err(Error::InvalidInput(format!(
                    "duplicate fact for ({}, {}, {})",
                    f.seller_id, f.product_id, f.date
                )));
            }
            if f.units < 0 || f.page_views < 0 || f.sales_cents < 0 {
                return Err(Error::InvalidInput(format!("negative measure for {} on {}", f.product_id, f.date)));
            }
            if !(0..=10_000).contains(&f.conversion_bp) {
                return Err(Error::InvalidInput(format!("conversion out of range for {} on {}", f.product_id, f.date)));
            }
        }
        drop(seen);
        let mut metrics = HashSet::new();
        for b in &benchmarks {
            if !b.peer_value.is_finite() {
                return Err(Error::InvalidInput(format!("benchmark '{}' is not finite", b.metric)));
            }
            if !metrics.insert(b.metric.as_str()) {
                return Err(Error::InvalidInput(format!("duplicate benchmark '{}'", b.metric)));
            }
        }
        drop(metrics);
        facts.sort_by(|a, b| {
            (a.seller_id.as_str(), a.date, a.product_id.as_str()).cmp(&(b.seller_id.as_str(), b.date, b.product_id.as_str()))
        });
        let mut sellers: HashMap<String, (usize, usize)> = HashMap::new();
        for (i, f) in facts.iter().enumerate() {
            sellers
                .entry(f.seller_id.clone())
                .and_modify(|r| r.1 = i + 1)
                .or_insert((i, i + 1));
        }
        Ok(SellerStore {
            facts,
            benchmarks,
            sellers,
        })
    }

    pub fn facts(&self) -> &[FactRow] {
        &self.facts
    }

    pub fn benchmarks(&self) -> &[BenchmarkRow] {
        &self.benchmarks
    }

    pub fn sellers(&self) -> BTreeSet<&str> {
        self.sellers.keys().map(String::as_str).collect()
    }

    /// The seller's facts dated within `range`, sorted by (date, product).
    pub fn facts_in(&self, seller_id: &str, range: &DateRange) -> &[FactRow] {
        let Some(&(lo, hi)) = self.sellers.get(seller_id) else {
            return &[];
        };
        let rows = &self.facts[lo..hi];
        let start = rows.partition_point(|f| f.date < range.start);
        let end = rows.partition_point(|f| f.date <= range.end);
        &rows[start..end.max(start)]
    }

    pub fn date_span(&self) -> Option<DateRange> {
        let min = self.facts.iter().map(|f| f.date).min()?;
        let max = self.facts.iter().map(|f| f.date).max()?;
        DateRange::new(min, max)
    }

    pub fn write_csv(&self, facts_path: &Path, benchmarks_path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(facts_path).map_err(csv_err)?;
        for f in &self.facts {
            w.serialize(f).map_err(csv_err)?;
        }
        w.flush()?;
        let mut w = csv::Writer::from_path(benchmarks_path).map_err(csv_err)?;
        for b in &self.benchmarks {
            w.serialize(b).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(facts_path: &Path, benchmarks_path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(facts_path).map_err(csv_err)?;
        let facts = r.deserialize().collect::<std::result::Result<Vec<FactRow>, _>>().map_err(csv_err)?;
        let mut r = csv::Reader::from_path(benchmarks_path).map_err(csv_err)?;
        let benchmarks = r
            .deserialize()
            .collect::<std::result::Result<Vec<BenchmarkRow>, _>>()
            .map_err(csv_err)?;
        SellerStore::new(facts, benchmarks)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Serialization(format!("csv: {e}"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateParams {
    pub seed: u64,
    pub sellers: Vec<String>,
    pub n_products: usize,
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl GenerateParams {
    pub fn new(seed: u64, n_products: usize, range: DateRange) -> Self {
        GenerateParams {
            seed,
            sellers: vec![DEFAULT_SELLER.to_string()],
            n_products,
            start: range.start,
            end: range.end,
        }
    }
}

struct ProductProfile {
    id: String,
    price_cents: i64,
    base_units: f64,
    yearly_growth: f64,
    season_amp: f64,
    season_peak: f64,
    base_conversion: f64,
}

pub fn generate_store(seed: u64, n_products: usize, range: DateRange) -> Result<SellerStore> {
    generate_store_with(&GenerateParams::new(seed, n_products, range))
}

/// Synthetic daily facts with yearly trend, monthly seasonality, a weekend
/// lift and multiplicative noise. Deterministic per parameters.
pub fn generate_store_with(p: &GenerateParams) -> Result<SellerStore> {
    if p.n_products == 0 {
        return Err(Error::InvalidInput("n_products must be at least 1".into()));
    }
    if p.sellers.is_empty() {
        return Err(Error::InvalidInput("at least one seller is required".into()));
    }
    let range = DateRange::new(p.start, p.end)
        .ok_or_else(|| Error::InvalidInput(format!("empty date range {} .. {}", p.start, p.end)))?;

    let mut facts = Vec::with_capacity(p.sellers.len() * p.n_products * range.days() as usize);
    for seller in &p.sellers {
        let mut rng = seeded_rng(p.seed, &format!("store:{seller}"));
        let profiles: Vec<ProductProfile> = (0..p.n_products)
            .map(|i| ProductProfile {
                id: format!("P{:03}", i + 1),
                price_cents: rng.gen_range(5..=200) * 100 - 1,
                base_units: rng.gen_range(2.0..40.0),
                yearly_growth: rng.gen_range(-0.15..0.45),
                season_amp: rng.gen_range(0.1..0.35),
                season_peak: rng.gen_range(0.0..12.0),
                base_conversion: rng.gen_range(0.03..0.15),
            })
            .collect();
        let mut day = range.start;
        loop {
            let years = (day - range.start).num_days() as f64 / 365.25;
            let month_pos = day.month0() as f64 + (day.day0() as f64) / 31.0;
            let weekend = matches!(day.weekday(), Weekday::Sat | Weekday::Sun);
            for prof in &profiles {
                let season = 1.0 + prof.season_amp * (2.0 * PI * (month_pos - prof.season_peak) / 12.0).cos();
                let trend = (1.0 + prof.yearly_growth).powf(years);
                let lift = if weekend { 1.15 } else { 1.0 };
                let noise = rng.gen_range(0.75..1.25);
                let units = (prof.base_units * season * trend * lift * noise).round().max(0.0) as i64;
                let conversion = prof.base_conversion * rng.gen_range(0.85..1.15);
                let page_views = ((units as f64 / conversion).ceil() as i64 + rng.gen_range(0..5)).max(units).max(1);
                let conversion_bp = ((units as f64 * 10_000.0) / page_views as f64).round() as i64;
                facts.push(FactRow {
                    seller_id: seller.clone(),
                    product_id: prof.id.clone(),
                    date: day,
                    sales_cents: units * prof.price_cents,
                    units,
                    page_views,
                    conversion_bp,
                });
            }
            if day == range.end {
                break;
            }
            day = day + Days::new(1);
        }
    }

    let mut rng = seeded_rng(p.seed, "benchmarks");
    let first = &p.sellers[0];
    let (mut cents, mut units, mut views) = (0i64, 0i64, 0i64);
    for f in facts.iter().filter(|f| &f.seller_id == first) {
        cents += f.sales_cents;
        units += f.units;
        views += f.page_views;
    }
    let days = range.days() as f64;
    let round4 = |v: f64| (v * 10_000.0).round() / 10_000.0;
    let conversion = if views > 0 { units as f64 / views as f64 } else { 0.0 };
    let asp = if units > 0 { cents as f64 / units as f64 / 100.0 } else { 0.0 };
    let views_per_day = views as f64 / (p.n_products as f64 * days);
    let benchmarks = vec![
        BenchmarkRow {
            metric: "conversion".into(),
            peer_value: round4(conversion * rng.gen_range(0.8..1.3)),
        },
        BenchmarkRow {
            metric: "average_selling_price".into(),
            peer_value: round4(asp * rng.gen_range(0.8..1.3)),
        },
        BenchmarkRow {
            metric: "daily_page_views_per_product".into(),
            peer_value: round4(views_per_day * rng.gen_range(0.8..1.3)),
        },
    ];
    SellerStore::new(facts, benchmarks)
}
