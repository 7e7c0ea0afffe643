//! Brute-force ground truth for the fixture benchmark, computed straight
//! from raw fact rows with its own arithmetic and formatting. Shares no code
//! with the dataplane functions or the analyses.

use std::collections::BTreeMap;

use chrono::{Datelike, Duration, NaiveDate};
use insight_core::dataplane::{FactRow, SellerStore, DEFAULT_SELLER};
use insight_core::eval::ExpectedFact;

fn d(s: &str) -> NaiveDate {
    s.parse().unwrap()
}

fn rows<'a>(store: &'a SellerStore, start: &str, end: &str) -> Vec<&'a FactRow> {
    let (a, b) = (d(start), d(end));
    store
        .facts()
        .iter()
        .filter(|f| f.seller_id == DEFAULT_SELLER && f.date >= a && f.date <= b)
        .collect()
}

#[derive(Default, Clone, Copy)]
struct Sum {
    cents: i64,
    units: i64,
    views: i64,
}

impl Sum {
    fn of<'a>(it: impl IntoIterator<Item = &'a &'a FactRow>) -> Sum {
        let mut s = Sum::default();
        for f in it {
            s.cents += f.sales_cents;
            s.units += f.units;
            s.views += f.page_views;
        }
        s
    }

    fn dollars(&self) -> f64 {
        self.cents as f64 / 100.0
    }

    fn conversion(&self) -> Option<f64> {
        if self.views == 0 {
            None
        } else {
            Some(self.units as f64 / self.views as f64)
        }
    }

    /// Rounded to whole cents, half away from zero.
    fn asp(&self) -> Option<f64> {
        if self.units == 0 {
            return None;
        }
        let cents = (2 * self.cents + self.units) / (2 * self.units);
        Some(cents as f64 / 100.0)
    }
}

fn fact(subject: &str, metric: &str, value: f64) -> ExpectedFact {
    ExpectedFact {
        subject: subject.to_string(),
        metric: metric.to_string(),
        value,
        tolerance: 1e-9 * value.abs().max(1.0),
    }
}

const MONTHS: [&str; 12] = [
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

fn last_day(y: i32, m: u32) -> u32 {
    (28..=31).rev().find(|&day| NaiveDate::from_ymd_opt(y, m, day).is_some()).unwrap()
}

fn label(start: &str, end: &str) -> String {
    let (a, b) = (d(start), d(end));
    if a.day() == 1 && a.year() == b.year() && a.month() == b.month() && b.day() == last_day(b.year(), b.month()) {
        format!("{} {} ({start} ~ {end})", MONTHS[a.month0() as usize], a.year())
    } else {
        format!("{start} ~ {end}")
    }
}

fn per_product(rs: &[&FactRow]) -> BTreeMap<String, Sum> {
    let mut m: BTreeMap<String, Vec<&FactRow>> = BTreeMap::new();
    for f in rs {
        m.entry(f.product_id.clone()).or_default().push(f);
    }
    m.into_iter().map(|(k, v)| (k, Sum::of(v.iter()))).collect()
}

/// Sorted by `key` in the given direction, ties by product id ascending.
fn ranked(map: &BTreeMap<String, Sum>, key: fn(&Sum) -> i64, desc: bool, k: usize) -> Vec<(String, Sum)> {
    let mut v: Vec<(String, Sum)> = map.iter().map(|(p, s)| (p.clone(), *s)).collect();
    v.sort_by(|a, b| {
        let o = key(&a.1).cmp(&key(&b.1));
        let o = if desc { o.reverse() } else { o };
        o.then_with(|| a.0.cmp(&b.0))
    });
    v.truncate(k);
    v
}

fn push_opt(out: &mut Vec<ExpectedFact>, subject: &str, metric: &str, v: Option<f64>) {
    if let Some(v) = v {
        out.push(fact(subject, metric, v));
    }
}

fn full_row(out: &mut Vec<ExpectedFact>, subject: &str, s: &Sum) {
    out.push(fact(subject, "sales", s.dollars()));
    out.push(fact(subject, "units", s.units as f64));
    out.push(fact(subject, "page_views", s.views as f64));
    push_opt(out, subject, "conversion", s.conversion());
    push_opt(out, subject, "average_selling_price", s.asp());
}

fn month_key(f: &FactRow) -> (i32, u32) {
    (f.date.year(), f.date.month())
}

fn monthly(store: &SellerStore, start: &str, end: &str) -> BTreeMap<(i32, u32), Sum> {
    let rs = rows(store, start, end);
    let mut m: BTreeMap<(i32, u32), Vec<&FactRow>> = BTreeMap::new();
    for f in &rs {
        m.entry(month_key(f)).or_default().push(f);
    }
    m.into_iter().map(|(k, v)| (k, Sum::of(v.iter()))).collect()
}

/// Slope by the closed form n*Sxy - Sx*Sy over n*Sxx - Sx^2.
fn slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (sx, sy) = points.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let den = n * sxx - sx * sx;
    if points.len() < 2 || den == 0.0 {
        0.0
    } else {
        (n * sxy - sx * sy) / den
    }
}

const AUG: (&str, &str) = ("2024-08-01", "2024-08-31");
const TREND: (&str, &str) = ("2023-09-01", "2024-08-31");
const SEASONAL: (&str, &str) = ("2022-09-01", "2024-08-31");

fn period_facts(store: &SellerStore) -> Vec<ExpectedFact> {
    let s = Sum::of(rows(store, AUG.0, AUG.1).iter());
    let subject = label(AUG.0, AUG.1);
    let mut out = Vec::new();
    full_row(&mut out, &subject, &s);
    out
}

fn trend_facts(store: &SellerStore) -> Vec<ExpectedFact> {
    let m = monthly(store, TREND.0, TREND.1);
    let origin = d(TREND.0);
    let x = |(y, mo): (i32, u32)| ((y - origin.year()) * 12 + mo as i32 - origin.month() as i32) as f64;
    let series: [(&str, fn(&Sum) -> Option<f64>); 4] = [
        ("sales", |s| Some(s.dollars())),
        ("units", |s| Some(s.units as f64)),
        ("page_views", |s| Some(s.views as f64)),
        ("conversion", Sum::conversion),
    ];
    series
        .iter()
        .map(|(name, f)| {
            let pts: Vec<(f64, f64)> = m.iter().filter_map(|(k, s)| f(s).map(|v| (x(*k), v))).collect();
            fact("monthly series", &format!("{name}_trend"), slope(&pts))
        })
        .collect()
}

fn seasonal_facts(store: &SellerStore) -> Vec<ExpectedFact> {
    let m = monthly(store, SEASONAL.0, SEASONAL.1);
    let overall = m.values().map(|s| s.cents as f64).sum::<f64>() / m.len() as f64;
    (1..=12u32)
        .filter_map(|mo| {
            let vals: Vec<f64> = m.iter().filter(|(k, _)| k.1 == mo).map(|(_, s)| s.cents as f64).collect();
            if vals.is_empty() {
                return None;
            }
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            Some(fact(MONTHS[mo as usize - 1], "sales_seasonal_index", mean / overall))
        })
        .collect()
}

fn benchmark_facts(store: &SellerStore) -> Vec<ExpectedFact> {
    let rs = rows(store, AUG.0, AUG.1);
    let s = Sum::of(rs.iter());
    let products = per_product(&rs).len() as f64;
    let days = (d(AUG.1) - d(AUG.0)).num_days() as f64 + 1.0;
    let mut out = Vec::new();
    for b in store.benchmarks() {
        let v = match b.metric.as_str() {
            "conversion" => s.conversion(),
            "average_selling_price" => s.asp(),
            "daily_page_views_per_product" if products > 0.0 => Some(s.views as f64 / (days * products)),
            _ => None,
        };
        push_opt(&mut out, "seller vs peers", &b.metric, v);
    }
    out
}

fn top_by(store: &SellerStore, range: (&str, &str), key: fn(&Sum) -> i64, desc: bool, k: usize, metrics: &[&str]) -> Vec<ExpectedFact> {
    let rs = rows(store, range.0, range.1);
    let mut out = Vec::new();
    for (p, s) in ranked(&per_product(&rs), key, desc, k) {
        for m in metrics {
            let v = match *m {
                "sales" => Some(s.dollars()),
                "units" => Some(s.units as f64),
                "page_views" => Some(s.views as f64),
                "conversion" => s.conversion(),
                "average_selling_price" => s.asp(),
                _ => unreachable!(),
            };
            push_opt(&mut out, &p, m, v);
        }
    }
    out
}

fn one_product(store: &SellerStore, pid: &str, metrics: &[&str]) -> Vec<ExpectedFact> {
    let rs: Vec<&FactRow> = rows(store, AUG.0, AUG.1).into_iter().filter(|f| f.product_id == pid).collect();
    let s = Sum::of(rs.iter());
    let mut out = Vec::new();
    if rs.is_empty() {
        return out;
    }
    for m in metrics {
        match *m {
            "sales" => out.push(fact(pid, "sales", s.dollars())),
            "page_views" => out.push(fact(pid, "page_views", s.views as f64)),
            "conversion" => push_opt(&mut out, pid, "conversion", s.conversion()),
            _ => unreachable!(),
        }
    }
    out
}

fn monday_of(day: NaiveDate) -> NaiveDate {
    day - Duration::days(day.weekday().num_days_from_monday() as i64)
}

/// Expected supporting facts for one fixture item.
pub fn expected_facts(store: &SellerStore, id: &str) -> Vec<ExpectedFact> {
    let total = |range: (&str, &str), metric: &str| {
        let s = Sum::of(rows(store, range.0, range.1).iter());
        let v = match metric {
            "sales" => s.dollars(),
            "units" => s.units as f64,
            "page_views" => s.views as f64,
            _ => unreachable!(),
        };
        vec![fact(&label(range.0, range.1), metric, v)]
    };
    match id {
        "b01" => total(AUG, "sales"),
        "b02" => top_by(store, AUG, |s| s.cents, true, 3, &["sales"]),
        "b03" => total(("2024-09-02", "2024-09-08"), "units"),
        "b04" => total(AUG, "page_views"),
        "b05" => top_by(store, ("2024-07-01", "2024-07-31"), |s| s.cents, false, 3, &["sales"]),
        "b06" => top_by(store, AUG, |s| s.views, true, 5, &["page_views", "conversion"]),
        "b07" => {
            let mut out = Vec::new();
            for ((y, m), s) in monthly(store, "2024-04-01", "2024-06-30") {
                full_row(&mut out, &format!("{y}-{m:02}"), &s);
            }
            out
        }
        "b08" => {
            let rs = rows(store, AUG.0, AUG.1);
            let mut days: BTreeMap<NaiveDate, Vec<&FactRow>> = BTreeMap::new();
            for f in &rs {
                days.entry(f.date).or_default().push(f);
            }
            let best = days
                .iter()
                .map(|(k, v)| (*k, Sum::of(v.iter())))
                .fold(None::<(NaiveDate, Sum)>, |acc, (k, s)| match acc {
                    Some((_, b)) if b.cents >= s.cents => acc,
                    _ => Some((k, s)),
                })
                .unwrap();
            let mut out = Vec::new();
            let subject = best.0.to_string();
            out.push(fact(&subject, "sales", best.1.dollars()));
            out.push(fact(&subject, "units", best.1.units as f64));
            out.push(fact(&subject, "page_views", best.1.views as f64));
            push_opt(&mut out, &subject, "conversion", best.1.conversion());
            out
        }
        "b09" => one_product(store, "P007", &["sales"]),
        "b10" => one_product(store, "P012", &["page_views", "conversion"]),
        "b11" => {
            let cur = Sum::of(rows(store, AUG.0, AUG.1).iter());
            let prior = Sum::of(rows(store, "2023-08-01", "2023-08-31").iter());
            let subject = label(AUG.0, AUG.1);
            let mut out = vec![
                fact(&subject, "sales", cur.dollars()),
                fact(&subject, "sales_prior_year", prior.dollars()),
                fact(&subject, "sales_yoy_delta", (cur.cents - prior.cents) as f64 / 100.0),
            ];
            if prior.cents != 0 {
                out.push(fact(&subject, "sales_yoy_pct", (cur.cents - prior.cents) as f64 / prior.cents as f64));
            }
            out
        }
        "b12" => {
            let mut weeks: BTreeMap<NaiveDate, i64> = BTreeMap::new();
            for f in rows(store, AUG.0, AUG.1) {
                *weeks.entry(monday_of(f.date)).or_default() += f.units;
            }
            weeks.into_iter().map(|(w, u)| fact(&w.to_string(), "units", u as f64)).collect()
        }
        "b13" => monthly(store, "2024-06-01", "2024-08-31")
            .into_iter()
            .map(|((y, m), s)| fact(&format!("{y}-{m:02}-01"), "page_views", s.views as f64))
            .collect(),
        "b14" => top_by(store, ("2024-04-01", "2024-06-30"), |s| s.cents, true, 10, &["sales"]),
        "b15" => top_by(
            store,
            AUG,
            |s| s.units,
            true,
            3,
            &["sales", "units", "page_views", "conversion", "average_selling_price"],
        ),
        "b16" | "b20" => {
            let mut out = period_facts(store);
            out.extend(trend_facts(store));
            out.extend(seasonal_facts(store));
            out
        }
        "b17" | "b19" => {
            let mut out = period_facts(store);
            out.extend(benchmark_facts(store));
            out
        }
        "b18" => {
            let mut out = period_facts(store);
            out.extend(trend_facts(store));
            out.extend(benchmark_facts(store));
            out
        }
        other => panic!("no oracle for {other}"),
    }
}
