use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::analyses::{Analysis, AnalysisTable};
use super::paths::ResolutionPath;
use super::DomainCategory;
use crate::dataplane::{format_cell, Cell, DataTable};
use crate::error::Result;
use crate::llm::LlmClient;
use crate::manager::temporal::DateRange;
use crate::types::SupportingFact;
use crate::workflow::postprocess::table_text;

pub const NARRATIVE_LABEL: &str = "Overall business insights: ";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Insight {
    pub text: String,
    pub supporting: Vec<SupportingFact>,
    pub category: DomainCategory,
}

fn label(metric: &str) -> &str {
    match metric {
        "sales" => "Sales",
        "units" => "Units sold",
        "average_selling_price" => "Average selling price",
        "page_views" => "Page views",
        "conversion" => "Conversion rate",
        "daily_page_views_per_product" => "Daily page views per product",
        other => other,
    }
}

/// Numeric value of a cell in reporting units: dollars for currency,
/// fractions for percentages.
fn value_of(cell: &Cell) -> Option<f64> {
    match cell {
        Cell::Currency(c) => Some(*c as f64 / 100.0),
        c => c.as_f64(),
    }
}

fn signed(cell: &Cell, column: &str) -> String {
    let text = format_cell(cell, column);
    let positive = match cell {
        Cell::Integer(v) | Cell::Currency(v) => *v > 0,
        Cell::Decimal(v) | Cell::Percent(v) => *v > 0.0 && text.chars().any(|c| ('1'..='9').contains(&c)),
        _ => false,
    };
    if positive {
        format!("+{text}")
    } else {
        text
    }
}

fn bps(delta: f64) -> String {
    let b = (delta * 10_000.0).round() as i64;
    if b > 0 {
        format!("+{b} bps")
    } else {
        format!("{b} bps")
    }
}

fn get<'t>(t: &'t DataTable, row: &'t [Cell], col: &str) -> Option<&'t Cell> {
    t.column_index(col).map(|i| &row[i])
}

fn yoy_comparison(t: &DataTable, row: &[Cell], metric: &str) -> Option<String> {
    let delta = get(t, row, &format!("{metric}_yoy_delta"))?;
    let pct = get(t, row, &format!("{metric}_yoy_pct"))?;
    match (delta, pct) {
        (Cell::NotAvailable, _) => None,
        (Cell::Percent(d), _) => Some(format!("YoY {}", bps(*d))),
        (d, Cell::NotAvailable) => Some(format!("YoY {}", signed(d, metric))),
        (d, p) => Some(format!("YoY {}, {}", signed(d, metric), signed(p, "pct"))),
    }
}

struct Line {
    text: String,
    facts: Vec<SupportingFact>,
}

fn fact(subject: &str, metric: &str, value: f64, comparison: Option<String>) -> SupportingFact {
    SupportingFact {
        subject: subject.to_string(),
        metric: metric.to_string(),
        value,
        comparison,
    }
}

fn period_lines(t: &DataTable, subject: &str, with_yoy: bool) -> Vec<Line> {
    let Some(row) = t.rows().first() else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for (i, col) in t.columns().iter().enumerate() {
        let m = col.name.as_str();
        if m.contains("_prior_year") || m.contains("_yoy_") {
            continue;
        }
        let cell = &row[i];
        let Some(v) = value_of(cell) else {
            out.push(Line {
                text: format!("- {}: N/A", label(m)),
                facts: Vec::new(),
            });
            continue;
        };
        let cmp = if with_yoy { yoy_comparison(t, row, m) } else { None };
        let text = match &cmp {
            Some(c) => format!("- {}: {} ({c})", label(m), format_cell(cell, m)),
            None => format!("- {}: {}", label(m), format_cell(cell, m)),
        };
        out.push(Line {
            text,
            facts: vec![fact(subject, m, v, cmp)],
        });
    }
    out
}

fn trend_lines(t: &DataTable) -> Vec<Line> {
    let mut out = Vec::new();
    for row in t.rows() {
        let (Some(Cell::Text(m)), Some(Cell::Decimal(slope)), Some(Cell::Text(dir))) =
            (get(t, row, "metric"), get(t, row, "slope"), get(t, row, "direction"))
        else {
            continue;
        };
        out.push(Line {
            text: format!("- {} trend over the trailing months: {dir}", label(m)),
            facts: vec![fact("monthly series", &format!("{m}_trend"), *slope, Some(dir.clone()))],
        });
    }
    out
}

fn seasonal_lines(t: &DataTable) -> Vec<Line> {
    let points: Vec<(&str, f64)> = t
        .rows()
        .iter()
        .filter_map(|r| match (get(t, r, "calendar_month"), get(t, r, "seasonal_index")) {
            (Some(Cell::Text(m)), Some(Cell::Decimal(i))) => Some((m.as_str(), *i)),
            _ => None,
        })
        .collect();
    if points.len() < 2 {
        return Vec::new();
    }
    // First maximum and first minimum in calendar order.
    let hi = points.iter().fold(points[0], |a, b| if b.1 > a.1 { *b } else { a });
    let lo = points.iter().fold(points[0], |a, b| if b.1 < a.1 { *b } else { a });
    let fmt = |x: f64| crate::dataplane::table::format_number(x, 2);
    vec![Line {
        text: format!(
            "- Seasonality: sales peak in {} (index {}) and are lowest in {} (index {})",
            hi.0,
            fmt(hi.1),
            lo.0,
            fmt(lo.1)
        ),
        facts: points
            .iter()
            .map(|(m, i)| fact(m, "sales_seasonal_index", *i, None))
            .collect(),
    }]
}

fn benchmark_value(metric: &str, v: f64) -> String {
    match metric {
        "conversion" => format_cell(&Cell::Percent(v), metric),
        "average_selling_price" => format_cell(&Cell::Currency((v * 100.0).round() as i64), metric),
        _ => format_cell(&Cell::Decimal(v), metric),
    }
}

fn benchmark_lines(t: &DataTable) -> Vec<Line> {
    let mut out = Vec::new();
    for row in t.rows() {
        let (Some(Cell::Text(m)), Some(seller), Some(Cell::Decimal(peer)), Some(delta), Some(Cell::Text(pos))) = (
            get(t, row, "metric"),
            get(t, row, "seller_value"),
            get(t, row, "peer_value"),
            get(t, row, "delta"),
            get(t, row, "position"),
        ) else {
            continue;
        };
        let (Cell::Decimal(seller), Cell::Decimal(delta)) = (seller, delta) else {
            out.push(Line {
                text: format!("- {}: N/A vs peers {}", label(m), benchmark_value(m, *peer)),
                facts: Vec::new(),
            });
            continue;
        };
        let sign = if *delta > 0.0 { "+" } else { "" };
        let cmp = format!("{pos} peers ({}{})", sign, benchmark_value(m, *delta));
        out.push(Line {
            text: format!("- {}: {} vs peers {} ({cmp})", label(m), benchmark_value(m, *seller), benchmark_value(m, *peer)),
            facts: vec![fact("seller vs peers", m, *seller, Some(cmp))],
        });
    }
    out
}

fn lines(tables: &[AnalysisTable], period: &DateRange) -> Vec<Line> {
    let subject = period.label();
    let has_yoy = tables.iter().any(|t| t.analysis == Analysis::YoyCompare);
    let mut out = Vec::new();
    for t in tables {
        match t.analysis {
            // The YoY table repeats the aggregate values with comparisons.
            Analysis::PeriodAggregate if has_yoy => {}
            Analysis::PeriodAggregate => out.extend(period_lines(&t.table, &subject, false)),
            Analysis::YoyCompare => out.extend(period_lines(&t.table, &subject, true)),
            Analysis::Trend => out.extend(trend_lines(&t.table)),
            Analysis::SeasonalIndex => out.extend(seasonal_lines(&t.table)),
            Analysis::BenchmarkCompare => out.extend(benchmark_lines(&t.table)),
        }
    }
    out
}

/// Machine-readable claims extracted from the analysis tables.
pub fn supporting_facts(tables: &[AnalysisTable], period: &DateRange) -> Vec<SupportingFact> {
    lines(tables, period).into_iter().flat_map(|l| l.facts).collect()
}

/// Deterministic headline summary of the analysis tables. Every figure it
/// cites is also in [`supporting_facts`].
pub fn metric_summary(tables: &[AnalysisTable], period: &DateRange) -> String {
    let ls = lines(tables, period);
    if ls.is_empty() {
        return String::new();
    }
    let mut out = format!("For {}:\n", period.label());
    for l in ls {
        let _ = writeln!(out, "{}", l.text);
    }
    out.trim_end().to_string()
}

fn analyses_text(tables: &[AnalysisTable]) -> String {
    if tables.is_empty() {
        return "(none)\n".to_string();
    }
    tables
        .iter()
        .map(|t| format!("{}:\n{}", t.analysis, table_text(&t.table)))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Knowledge-injected generation over the analysis tables. The narrative
/// comes from the LLM; the headline figures and supporting facts come from
/// the tables.
pub async fn generate_insight(
    llm: &LlmClient,
    augmented_query: &str,
    tables: &[AnalysisTable],
    path: &ResolutionPath,
    period: &DateRange,
) -> Result<Insight> {
    let prompt = path.template.render(
        &[
            ("category", path.category.to_string()),
            ("augmented_query", augmented_query.to_string()),
            ("knowledge", path.knowledge.clone()),
            ("analyses", analyses_text(tables)),
        ]
        .into_iter()
        .collect(),
    )?;
    let narrative = llm.complete(prompt).await?;
    let summary = metric_summary(tables, period);
    let text = if summary.is_empty() {
        format!("{NARRATIVE_LABEL}{}", narrative.trim())
    } else {
        format!("{summary}\n\n{NARRATIVE_LABEL}{}", narrative.trim())
    };
    Ok(Insight {
        text,
        supporting: supporting_facts(tables, period),
        category: path.category,
    })
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataplane::{generate_store, Column, ColumnType, Dataplane, Registry, DEFAULT_SELLER};
    use crate::llm::{PromptLibrary, ScriptedProvider, ScriptedRule};
    use crate::manager::temporal::build_temporal_context;
    use crate::workers::analyses::{run_analyses, AnalysisWindow};
    use crate::workers::paths::ResolutionPaths;
    use chrono::NaiveDate;
    use std::sync::Arc;
    use std::time::Duration;

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    fn feb() -> DateRange {
        DateRange::month_of(d(2024, 2, 1))
    }

    fn yoy_table(sales: (i64, i64), conv: (f64, f64)) -> AnalysisTable {
        let mut cols = Vec::new();
        let mut row = Vec::new();
        let s_delta = Cell::Currency(sales.0 - sales.1);
        let s_pct = if sales.1 == 0 {
            Cell::NotAvailable
        } else {
            Cell::Percent((sales.0 - sales.1) as f64 / sales.1 as f64)
        };
        for (name, ty, cells) in [
            ("sales", ColumnType::Currency, [Cell::Currency(sales.0), Cell::Currency(sales.1), s_delta, s_pct]),
            (
                "conversion",
                ColumnType::Percent,
                [
                    Cell::Percent(conv.0),
                    Cell::Percent(conv.1),
                    Cell::Percent(conv.0 - conv.1),
                    Cell::Percent((conv.0 - conv.1) / conv.1),
                ],
            ),
        ] {
            cols.push(Column::new(name, ty));
            cols.push(Column::new(format!("{name}_prior_year"), ty));
            cols.push(Column::new(format!("{name}_yoy_delta"), ty));
            cols.push(Column::new(format!("{name}_yoy_pct"), ColumnType::Percent));
            row.extend(cells);
        }
        AnalysisTable {
            analysis: Analysis::YoyCompare,
            table: DataTable::new(cols, vec![row]).unwrap(),
        }
    }

    #[test]
    fn summary_lines() {
        let t = yoy_table((1_000_000, 1_250_000), (0.005, 0.01));
        let s = metric_summary(&[t.clone()], &feb());
        assert_eq!(
            s,
            "For February 2024 (2024-02-01 ~ 2024-02-29):\n- Sales: $10,000.00 (YoY -$2,500.00, -20.00%)\n- Conversion rate: 0.50% (YoY -50 bps)"
        );
        let facts = supporting_facts(&[t], &feb());
        assert_eq!(facts.len(), 2);
        assert_eq!(facts[0].metric, "sales");
        assert_eq!(facts[0].value, 10_000.0);
    }

    #[test]
    fn na_percent_is_omitted() {
        let t = yoy_table((50_000, 0), (0.02, 0.01));
        let s = metric_summary(&[t], &feb());
        assert!(s.contains("- Sales: $500.00 (YoY +$500.00)\n"), "{s}");
        assert!(!s.contains("N/A"));
    }

    #[test]
    fn benchmark_line() {
        let t = DataTable::new(
            vec![
                Column::new("metric", ColumnType::Text),
                Column::new("seller_value", ColumnType::Decimal),
                Column::new("peer_value", ColumnType::Decimal),
                Column::new("delta", ColumnType::Decimal),
                Column::new("position", ColumnType::Text),
            ],
            vec![vec![
                Cell::Text("conversion".into()),
                Cell::Decimal(0.02),
                Cell::Decimal(0.04),
                Cell::Decimal(0.02 - 0.04),
                Cell::Text("Below".into()),
            ]],
        )
        .unwrap();
        let s = metric_summary(
            &[AnalysisTable {
                analysis: Analysis::BenchmarkCompare,
                table: t,
            }],
            &feb(),
        );
        assert!(s.ends_with("- Conversion rate: 2.00% vs peers 4.00% (Below peers (-2.00%))"), "{s}");
    }

    fn fixture_run() -> (Vec<AnalysisTable>, DateRange) {
        let store = generate_store(7, 8, DateRange::new(d(2023, 1, 1), d(2024, 9, 30)).unwrap()).unwrap();
        let dp = Dataplane::new(Registry::builtin(), store);
        let w = AnalysisWindow::from_context(&build_temporal_context(d(2024, 9, 10)));
        let paths = ResolutionPaths::builtin(&PromptLibrary::builtin()).unwrap();
        let run = run_analyses(&paths.get(DomainCategory::Performance).analyses, &dp, DEFAULT_SELLER, &w, std::time::Instant::now()).unwrap();
        (run.tables, w.period)
    }

    #[tokio::test]
    async fn performance_insight_shape() {
        let (tables, period) = fixture_run();
        let paths = ResolutionPaths::builtin(&PromptLibrary::builtin()).unwrap();
        let llm = LlmClient::new(
            Arc::new(ScriptedProvider::new(vec![ScriptedRule::contains(
                "[task:insight:performance]\nQuestion: how does my business perform",
                "Sales rose with traffic while conversion held.",
            )])),
            Duration::from_secs(5),
        );
        let path = paths.get(DomainCategory::Performance);
        let a = generate_insight(&llm, "how does my business perform", &tables, path, &period).await.unwrap();
        let b = generate_insight(&llm, "how does my business perform", &tables, path, &period).await.unwrap();
        assert_eq!(a, b);
        assert!(a.text.starts_with("For August 2024 (2024-08-01 ~ 2024-08-31):\n- Sales: $"));
        for m in ["Units sold", "Average selling price", "Page views", "Conversion rate"] {
            assert!(a.text.contains(&format!("- {m}: ")), "{m} missing");
        }
        assert!(a.text.ends_with("\n\nOverall business insights: Sales rose with traffic while conversion held."));
        for m in ["sales", "units", "average_selling_price", "page_views", "conversion"] {
            assert!(a.supporting.iter().any(|f| f.metric == m), "{m} not supported");
        }
        assert_eq!(a.category, DomainCategory::Performance);
    }

    #[test]
    fn every_cited_metric_is_supported() {
        let (tables, period) = fixture_run();
        let text = metric_summary(&tables, &period);
        let facts = supporting_facts(&tables, &period);
        for line in text.lines().skip(1) {
            assert!(
                facts.iter().any(|f| line.contains(label(f.metric.trim_end_matches("_trend")))
                    || (f.metric == "sales_seasonal_index" && line.contains("Seasonality"))),
                "{line}"
            );
        }
    }

    #[tokio::test]
    async fn knowledge_is_injected() {
        let paths = ResolutionPaths::builtin(&PromptLibrary::builtin()).unwrap();
        let path = paths.get(DomainCategory::Recommendation);
        let key = path.knowledge.lines().next().unwrap().to_string();
        let llm = LlmClient::new(
            Arc::new(ScriptedProvider::new(vec![ScriptedRule::contains(key, "Restock the top sellers.")])),
            Duration::from_secs(5),
        );
        let i = generate_insight(&llm, "what should I do", &[], path, &feb()).await.unwrap();
        assert_eq!(i.text, "Overall business insights: Restock the top sellers.");
        assert!(i.supporting.is_empty());
    }
}
