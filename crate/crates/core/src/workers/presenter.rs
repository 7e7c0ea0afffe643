use std::collections::BTreeSet;
use std::sync::LazyLock;

use chrono::NaiveDate;
use regex::Regex;

use crate::dataplane::{format_cell, Cell, DataTable};
use crate::error::{Error, Result};
use crate::llm::{LlmClient, PromptLibrary};
use crate::manager::temporal::DateRange;
use crate::types::SupportingFact;
use crate::workflow::plan::Plan;
use crate::workflow::postprocess::table_text;

/// Deterministic answer for a plan that returned no rows.
pub fn no_data_message(period: Option<&DateRange>) -> String {
    match period {
        Some(p) => format!("No data was found for {}.", p.label()),
        None => "No data was found for the requested period.".to_string(),
    }
}

/// The reporting period of a plan: the date range of its first step that
/// carries both `start_date` and `end_date`.
pub fn plan_period(plan: &Plan) -> Option<DateRange> {
    let date = |v: Option<&serde_json::Value>| v.and_then(|v| v.as_str()).and_then(|s| s.parse::<NaiveDate>().ok());
    plan.steps.iter().find_map(|s| {
        let start = date(s.payload.get("start_date"))?;
        let end = date(s.payload.get("end_date"))?;
        DateRange::new(start, end)
    })
}

/// Formats retrieved tables into an answer. The tables should already be
/// post-processed. When every table is empty the answer is a fixed
/// no-data message and the LLM is not called.
pub async fn present(
    llm: &LlmClient,
    prompts: &PromptLibrary,
    augmented_query: &str,
    tables: &[DataTable],
    period: Option<&DateRange>,
) -> Result<String> {
    if tables.is_empty() {
        return Err(Error::InvalidInput("present needs at least one table".into()));
    }
    if tables.iter().all(DataTable::is_empty) {
        return Ok(no_data_message(period));
    }
    let rendered: Vec<String> = tables.iter().map(table_text).collect();
    let prompt = prompts.get("present")?.render(
        &[
            ("augmented_query", augmented_query.to_string()),
            ("tables", rendered.join("\n")),
        ]
        .into_iter()
        .collect(),
    )?;
    let answer = llm.complete(prompt).await?;
    Ok(answer.trim().to_string())
}

/// One fact per numeric cell of a typed result table. The subject is the
/// row's first text or date cell, or `default_subject` when there is none.
/// Currency values are in dollars and percentages are fractions.
pub fn table_facts(table: &DataTable, default_subject: &str) -> Vec<SupportingFact> {
    let mut out = Vec::new();
    for row in table.rows() {
        let subject = row
            .iter()
            .zip(table.columns())
            .find(|(c, _)| matches!(c, Cell::Text(_) | Cell::Date(_)))
            .map_or_else(|| default_subject.to_string(), |(c, col)| format_cell(c, &col.name));
        for (cell, col) in row.iter().zip(table.columns()) {
            let value = match cell {
                Cell::Currency(c) => *c as f64 / 100.0,
                Cell::Integer(_) | Cell::Decimal(_) | Cell::Percent(_) => cell.as_f64().expect("numeric"),
                _ => continue,
            };
            out.push(SupportingFact {
                subject: subject.clone(),
                metric: col.name.clone(),
                value,
                comparison: None,
            });
        }
    }
    out
}

static NUMBER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\d[\d,]*(?:\.\d+)?").expect("valid regex"));

fn numbers(text: &str) -> impl Iterator<Item = String> + '_ {
    NUMBER
        .find_iter(text)
        .map(|m| m.as_str().trim_end_matches(',').replace(',', ""))
}

/// Numeric tokens in `answer` that appear neither in the formatted tables
/// nor in `context` (typically the augmented query). List ordinals up to
/// the largest table length are allowed.
pub fn ungrounded_numbers(answer: &str, tables: &[DataTable], context: &str) -> Vec<String> {
    let mut allowed: BTreeSet<String> = numbers(context).collect();
    let mut longest = 0;
    for t in tables {
        longest = longest.max(t.len());
        for row in t.rows() {
            for (cell, col) in row.iter().zip(t.columns()) {
                allowed.extend(numbers(&format_cell(cell, &col.name)));
            }
        }
    }
    allowed.extend((1..=longest).map(|i| i.to_string()));
    let mut out: Vec<String> = numbers(answer).filter(|n| !allowed.contains(n)).collect();
    out.dedup();
    out
}
