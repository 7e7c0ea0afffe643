//! Deterministic analyses behind the insight generator. Every analysis reads
//! the seller's data through registered dataplane APIs and returns a typed
//! table.

use std::collections::BTreeMap;
use std::time::Instant;

use chrono::{Datelike, Days, NaiveDate};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::dataplane::functions::yoy;
use crate::dataplane::{Cell, Column, ColumnType, DataTable, Dataplane};
use crate::error::{Error, Result};
use crate::manager::temporal::{DateRange, TemporalContext};
use crate::types::StepTiming;
use crate::workflow::plan::PlanStep;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Analysis {
    PeriodAggregate,
    YoyCompare,
    Trend,
    SeasonalIndex,
    BenchmarkCompare,
}

impl Analysis {
    pub const ALL: [Analysis; 5] = [
        Analysis::PeriodAggregate,
        Analysis::YoyCompare,
        Analysis::Trend,
        Analysis::SeasonalIndex,
        Analysis::BenchmarkCompare,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Analysis::PeriodAggregate => "period_aggregate",
            Analysis::YoyCompare => "yoy_compare",
            Analysis::Trend => "trend",
            Analysis::SeasonalIndex => "seasonal_index",
            Analysis::BenchmarkCompare => "benchmark_compare",
        }
    }

    pub fn parse(name: &str) -> Option<Analysis> {
        Analysis::ALL.into_iter().find(|a| a.as_str() == name)
    }
}

impl std::fmt::Display for Analysis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Date windows the analyses run over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisWindow {
    /// Reporting period for aggregates, YoY and benchmarks.
    pub period: DateRange,
    /// Monthly series for the trend fit.
    pub trend: DateRange,
    /// Monthly series for seasonal indices.
    pub seasonal: DateRange,
}

pub const TREND_MONTHS: usize = 12;
pub const SEASONAL_MONTHS: usize = 24;

impl AnalysisWindow {
    /// Last complete month, with 12 and 24 trailing complete months for the
    /// trend and seasonal series.
    pub fn from_context(ctx: &TemporalContext) -> Self {
        let span = |n: usize| {
            let months = ctx.trailing_months(n);
            DateRange {
                start: months[0].start,
                end: ctx.last_month.end,
            }
        };
        AnalysisWindow {
            period: ctx.last_month,
            trend: span(TREND_MONTHS),
            seasonal: span(SEASONAL_MONTHS),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisTable {
    pub analysis: Analysis,
    pub table: DataTable,
}

/// Result of [`run_analyses`]: one table per analysis, plus the API calls
/// that were made, in order, and their timings for the trace.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysesRun {
    pub tables: Vec<AnalysisTable>,
    pub calls: Vec<PlanStep>,
    pub timings: Vec<StepTiming>,
}

struct Ctx<'a> {
    dp: &'a Dataplane,
    seller_id: &'a str,
    origin: Instant,
    calls: Vec<PlanStep>,
    timings: Vec<StepTiming>,
}

impl Ctx<'_> {
    fn call(&mut self, api: &str, payload: Value) -> Result<DataTable> {
        let step = PlanStep::api(&format!("a{}", self.calls.len() + 1), api, payload);
        let started = self.origin.elapsed().as_secs_f64() * 1000.0;
        let table = self.dp.invoke_api(self.seller_id, api, &step.payload)?;
        let ended = self.origin.elapsed().as_secs_f64() * 1000.0;
        self.timings.push(StepTiming {
            step_id: step.id.clone(),
            started_ms: started,
            elapsed_ms: ended - started,
        });
        self.calls.push(step);
        Ok(table)
    }

    fn call_range(&mut self, api: &str, range: &DateRange) -> Result<DataTable> {
        self.call(
            api,
            json!({"start_date": range.start.to_string(), "end_date": range.end.to_string()}),
        )
    }
}

/// Runs `analyses` in order. Timings are relative to `origin`.
pub fn run_analyses(
    analyses: &[Analysis],
    dp: &Dataplane,
    seller_id: &str,
    window: &AnalysisWindow,
    origin: Instant,
) -> Result<AnalysesRun> {
    let mut ctx = Ctx {
        dp,
        seller_id,
        origin,
        calls: Vec::new(),
        timings: Vec::new(),
    };
    let mut tables = Vec::with_capacity(analyses.len());
    for &a in analyses {
        let table = match a {
            Analysis::PeriodAggregate => period_aggregate(&mut ctx, &window.period)?,
            Analysis::YoyCompare => yoy_compare(&mut ctx, &window.period)?,
            Analysis::Trend => trend(&mut ctx, &window.trend)?,
            Analysis::SeasonalIndex => seasonal_index(&mut ctx, &window.seasonal)?,
            Analysis::BenchmarkCompare => benchmark_compare(&mut ctx, &window.period)?,
        };
        tables.push(AnalysisTable { analysis: a, table });
    }
    Ok(AnalysesRun {
        tables,
        calls: ctx.calls,
        timings: ctx.timings,
    })
}

/// Additive totals over a set of rows, with the derived rate metrics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PeriodTotals {
    pub sales_cents: i64,
    pub units: i64,
    pub page_views: i64,
}

impl PeriodTotals {
    pub fn conversion(&self) -> Option<f64> {
        (self.page_views > 0).then(|| self.units as f64 / self.page_views as f64)
    }

    pub fn average_selling_price_cents(&self) -> Option<i64> {
        (self.units > 0).then(|| (self.sales_cents as f64 / self.units as f64).round() as i64)
    }

    pub fn cell(&self, metric: &str) -> Cell {
        match metric {
            "sales" => Cell::Currency(self.sales_cents),
            "units" => Cell::Integer(self.units),
            "page_views" => Cell::Integer(self.page_views),
            "conversion" => self.conversion().map_or(Cell::NotAvailable, Cell::Percent),
            "average_selling_price" => self.average_selling_price_cents().map_or(Cell::NotAvailable, Cell::Currency),
            _ => Cell::NotAvailable,
        }
    }
}

/// Metrics reported by the aggregate and YoY analyses, in display order.
pub const PERIOD_METRICS: [(&str, ColumnType); 5] = [
    ("sales", ColumnType::Currency),
    ("units", ColumnType::Integer),
    ("average_selling_price", ColumnType::Currency),
    ("page_views", ColumnType::Integer),
    ("conversion", ColumnType::Percent),
];

fn int_at(row: &[Cell], idx: usize) -> i64 {
    match row[idx] {
        Cell::Integer(v) | Cell::Currency(v) => v,
        _ => 0,
    }
}

fn column(t: &DataTable, name: &str) -> Result<usize> {
    t.column_index(name)
        .ok_or_else(|| Error::Config(format!("analysis input lacks column '{name}'")))
}

fn totals_of(t: &DataTable) -> Result<PeriodTotals> {
    let (s, u, v) = (column(t, "sales")?, column(t, "units")?, column(t, "page_views")?);
    let overflow = || Error::ArithmeticDomain("period total overflow".into());
    let mut acc = PeriodTotals::default();
    for row in t.rows() {
        acc.sales_cents = acc.sales_cents.checked_add(int_at(row, s)).ok_or_else(overflow)?;
        acc.units = acc.units.checked_add(int_at(row, u)).ok_or_else(overflow)?;
        acc.page_views = acc.page_views.checked_add(int_at(row, v)).ok_or_else(overflow)?;
    }
    Ok(acc)
}

fn period_totals(ctx: &mut Ctx<'_>, range: &DateRange) -> Result<PeriodTotals> {
    let daily = ctx.call_range("get_daily_totals", range)?;
    totals_of(&daily)
}

fn period_row(t: &PeriodTotals) -> Vec<Cell> {
    PERIOD_METRICS.iter().map(|(m, _)| t.cell(m)).collect()
}

fn period_aggregate(ctx: &mut Ctx<'_>, range: &DateRange) -> Result<DataTable> {
    let totals = period_totals(ctx, range)?;
    let columns = PERIOD_METRICS.iter().map(|(m, ty)| Column::new(*m, *ty)).collect();
    DataTable::new(columns, vec![period_row(&totals)])
}

fn yoy_compare(ctx: &mut Ctx<'_>, range: &DateRange) -> Result<DataTable> {
    let cur = period_totals(ctx, range)?;
    let prior = period_totals(ctx, &range.previous_year())?;
    let mut columns = Vec::new();
    let mut row = Vec::new();
    for (m, ty) in PERIOD_METRICS {
        let (c, p) = (cur.cell(m), prior.cell(m));
        let (delta, pct) = yoy(&c, &p)?;
        columns.push(Column::new(m, ty));
        columns.push(Column::new(format!("{m}_prior_year"), ty));
        columns.push(Column::new(format!("{m}_yoy_delta"), ty));
        columns.push(Column::new(format!("{m}_yoy_pct"), ColumnType::Percent));
        row.extend([c, p, delta, pct]);
    }
    DataTable::new(columns, vec![row])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrendDirection {
    Up,
    Down,
    Flat,
}

impl TrendDirection {
    pub fn as_str(self) -> &'static str {
        match self {
            TrendDirection::Up => "Up",
            TrendDirection::Down => "Down",
            TrendDirection::Flat => "Flat",
        }
    }
}

/// Ordinary least-squares slope of `y` on `x`. Fewer than two distinct x
/// values give 0.
pub fn lsq_slope(points: &[(f64, f64)]) -> f64 {
    if points.len() < 2 {
        return 0.0;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx == 0.0 {
        return 0.0;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    sxy / sxx
}

/// Direction of a slope, with a dead band of 1% of the mean level.
pub fn trend_direction(slope: f64, mean: f64) -> TrendDirection {
    if slope == 0.0 || slope.abs() < 0.01 * mean.abs() {
        TrendDirection::Flat
    } else if slope > 0.0 {
        TrendDirection::Up
    } else {
        TrendDirection::Down
    }
}

fn month_offset(start: NaiveDate, d: NaiveDate) -> f64 {
    f64::from((d.year() - start.year()) * 12 + d.month() as i32 - start.month() as i32)
}

const TREND_METRICS: [&str; 4] = ["sales", "units", "page_views", "conversion"];

/// Currency in dollars, everything else as stored.
fn metric_value(cell: &Cell) -> Option<f64> {
    match cell {
        Cell::Currency(c) => Some(*c as f64 / 100.0),
        c => c.as_f64(),
    }
}

fn trend(ctx: &mut Ctx<'_>, range: &DateRange) -> Result<DataTable> {
    let monthly = ctx.call_range("get_monthly_totals", range)?;
    let mi = column(&monthly, "month")?;
    let columns = vec![
        Column::new("metric", ColumnType::Text),
        Column::new("months", ColumnType::Integer),
        Column::new("slope", ColumnType::Decimal),
        Column::new("mean", ColumnType::Decimal),
        Column::new("direction", ColumnType::Text),
    ];
    let mut rows = Vec::new();
    for m in TREND_METRICS {
        let ci = column(&monthly, m)?;
        let points: Vec<(f64, f64)> = monthly
            .rows()
            .iter()
            .filter_map(|r| match r[mi] {
                Cell::Date(d) => metric_value(&r[ci]).map(|v| (month_offset(range.start, d), v)),
                _ => None,
            })
            .collect();
        let n = points.len();
        let (slope, mean) = if n == 0 {
            (Cell::NotAvailable, Cell::NotAvailable)
        } else {
            let mean = points.iter().map(|p| p.1).sum::<f64>() / n as f64;
            (Cell::Decimal(lsq_slope(&points)), Cell::Decimal(mean))
        };
        let direction = match (&slope, &mean) {
            (Cell::Decimal(s), Cell::Decimal(mu)) => trend_direction(*s, *mu).as_str(),
            _ => "N/A",
        };
        rows.push(vec![
            Cell::Text(m.to_string()),
            Cell::Integer(n as i64),
            slope,
            mean,
            Cell::Text(direction.to_string()),
        ]);
    }
    DataTable::new(columns, rows)
}

/// One calendar month's seasonal index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeasonalPoint {
    pub month: u32,
    pub mean: f64,
    /// Month mean divided by the overall mean; `None` when the overall mean
    /// is zero.
    pub index: Option<f64>,
}

/// Seasonal indices from monthly totals in integer units (cents): the mean
/// of each calendar month across years divided by the mean of all months.
/// Output is ordered January to December and covers only months present.
pub fn seasonal_indices(monthly: &[(NaiveDate, i64)]) -> Vec<SeasonalPoint> {
    if monthly.is_empty() {
        return Vec::new();
    }
    let mut by_month: BTreeMap<u32, (i128, i64)> = BTreeMap::new();
    let mut total: i128 = 0;
    for (d, v) in monthly {
        let e = by_month.entry(d.month()).or_default();
        e.0 += i128::from(*v);
        e.1 += 1;
        total += i128::from(*v);
    }
    let overall = total as f64 / monthly.len() as f64;
    by_month
        .into_iter()
        .map(|(month, (sum, count))| {
            let mean = sum as f64 / count as f64;
            SeasonalPoint {
                month,
                mean,
                index: (overall != 0.0).then(|| mean / overall),
            }
        })
        .collect()
}

pub fn month_name(month: u32) -> &'static str {
    const NAMES: [&str; 12] = [
        "January",
        "February",
        "March",
        "April",
        "May",
        "June",
        "July",
        "August",
        "September",
        "October",
        "November",
        "December",
    ];
    NAMES[(month as usize - 1) % 12]
}

fn seasonal_index(ctx: &mut Ctx<'_>, range: &DateRange) -> Result<DataTable> {
    let monthly = ctx.call_range("get_monthly_totals", range)?;
    let (mi, si) = (column(&monthly, "month")?, column(&monthly, "sales")?);
    let series: Vec<(NaiveDate, i64)> = monthly
        .rows()
        .iter()
        .filter_map(|r| match (&r[mi], &r[si]) {
            (Cell::Date(d), Cell::Currency(c)) => Some((*d, *c)),
            _ => None,
        })
        .collect();
    let columns = vec![
        Column::new("calendar_month", ColumnType::Text),
        Column::new("mean_sales", ColumnType::Decimal),
        Column::new("seasonal_index", ColumnType::Decimal),
    ];
    let rows = seasonal_indices(&series)
        .into_iter()
        .map(|p| {
            vec![
                Cell::Text(month_name(p.month).to_string()),
                Cell::Decimal(p.mean / 100.0),
                p.index.map_or(Cell::NotAvailable, Cell::Decimal),
            ]
        })
        .collect();
    DataTable::new(columns, rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Position {
    Above,
    Below,
    Equal,
}

impl Position {
    pub fn as_str(self) -> &'static str {
        match self {
            Position::Above => "Above",
            Position::Below => "Below",
            Position::Equal => "Equal",
        }
    }
}

const EQUAL_EPS: f64 = 1e-9;

/// `seller - peer` and which side of the peer value the seller sits on.
pub fn benchmark_position(seller: f64, peer: f64) -> (f64, Position) {
    let delta = seller - peer;
    let pos = if delta.abs() <= EQUAL_EPS {
        Position::Equal
    } else if delta > 0.0 {
        Position::Above
    } else {
        Position::Below
    };
    (delta, pos)
}

/// Seller-side values for the benchmark metrics over `range`. ASP is in
/// dollars; daily page views are per product with any activity.
fn seller_benchmark_values(ctx: &mut Ctx<'_>, range: &DateRange) -> Result<BTreeMap<&'static str, Option<f64>>> {
    let by_product = ctx.call_range("get_product_performance", range)?;
    let totals = totals_of(&by_product)?;
    let products = by_product.len() as f64;
    let days = range.days() as f64;
    let mut out = BTreeMap::new();
    out.insert("conversion", totals.conversion());
    out.insert(
        "average_selling_price",
        totals.average_selling_price_cents().map(|c| c as f64 / 100.0),
    );
    out.insert(
        "daily_page_views_per_product",
        (products > 0.0).then(|| totals.page_views as f64 / (days * products)),
    );
    Ok(out)
}

fn benchmark_compare(ctx: &mut Ctx<'_>, range: &DateRange) -> Result<DataTable> {
    let seller = seller_benchmark_values(ctx, range)?;
    let peers = ctx.call("get_benchmarks", Value::Object(Map::new()))?;
    let (mi, pi) = (column(&peers, "metric")?, column(&peers, "peer_value")?);
    let columns = vec![
        Column::new("metric", ColumnType::Text),
        Column::new("seller_value", ColumnType::Decimal),
        Column::new("peer_value", ColumnType::Decimal),
        Column::new("delta", ColumnType::Decimal),
        Column::new("position", ColumnType::Text),
    ];
    let mut rows = Vec::new();
    for r in peers.rows() {
        let (Cell::Text(metric), Cell::Decimal(peer)) = (&r[mi], &r[pi]) else {
            continue;
        };
        let Some(own) = seller.get(metric.as_str()) else {
            continue;
        };
        let row = match own {
            Some(v) => {
                let (delta, pos) = benchmark_position(*v, *peer);
                vec![
                    Cell::Text(metric.clone()),
                    Cell::Decimal(*v),
                    Cell::Decimal(*peer),
                    Cell::Decimal(delta),
                    Cell::Text(pos.as_str().to_string()),
                ]
            }
            None => vec![
                Cell::Text(metric.clone()),
                Cell::NotAvailable,
                Cell::Decimal(*peer),
                Cell::NotAvailable,
                Cell::Text("N/A".to_string()),
            ],
        };
        rows.push(row);
    }
    DataTable::new(columns, rows)
}

/// First day of each month in `range`, in order.
pub fn months_in(range: &DateRange) -> Vec<NaiveDate> {
    let mut out = Vec::new();
    let mut cur = range.start.with_day(1).expect("day 1 exists");
    while cur <= range.end {
        out.push(cur);
        cur = DateRange::month_of(cur).end + Days::new(1);
    }
    out
}
