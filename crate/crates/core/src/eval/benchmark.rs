//! Runs a benchmark against any chat backend and scores the answers.

use std::collections::BTreeMap;
use std::fmt::Write;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use async_trait::async_trait;
use chrono::Utc;
use serde::{Deserialize, Serialize};
use tokio::sync::Semaphore;
use tokio::task::JoinSet;

use super::corpus::parse_jsonl;
use super::metrics::{
    aggregate_stats, completeness, correctness_or_zero, latency_percentile, question_accuracy, relevance, AggregateStats,
    Annotation, BenchmarkItem, ExpectedFact, Fraction, MetricReport, QuestionAccuracy,
};
use crate::error::{Error, ErrorInfo, Result};
use crate::orchestrator::Engine;
use crate::types::{Branch, ChatResponse, Query, SellerContext, SessionId, SupportingFact};

/// Anything that answers a question: the in-process engine or a remote
/// service.
#[async_trait]
pub trait ChatBackend: Send + Sync {
    async fn chat(&self, query: &str, session: &SessionId) -> Result<ChatResponse>;
}

/// The in-process engine bound to one seller context.
pub struct EngineBackend {
    pub engine: Arc<Engine>,
    pub context: SellerContext,
}

#[async_trait]
impl ChatBackend for EngineBackend {
    async fn chat(&self, query: &str, session: &SessionId) -> Result<ChatResponse> {
        let q = Query::new(query, session.clone(), Utc::now())?;
        Ok(self.engine.handle(&q, &self.context).await)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreSource {
    Annotation,
    Automatic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemResult {
    pub item_id: String,
    pub question: String,
    pub branch: Option<Branch>,
    pub answer: String,
    pub metrics: MetricReport,
    pub source: ScoreSource,
    pub insights_in_response: u64,
    pub correct_insights: u64,
    pub required_covered: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorInfo>,
    pub latency_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencySummary {
    pub p50_ms: f64,
    pub p90_ms: f64,
    pub p99_ms: f64,
    pub stats: AggregateStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub items: Vec<ItemResult>,
    pub relevance: AggregateStats,
    pub correctness: AggregateStats,
    pub completeness: AggregateStats,
    pub question_accuracy: QuestionAccuracy,
    pub failed_items: usize,
    /// Items whose correctness used the zero-insight convention.
    pub no_insight_items: Vec<String>,
    pub latency: LatencySummary,
}

impl BenchmarkReport {
    /// The report with every wall-clock field zeroed, for byte-level
    /// comparison of runs.
    pub fn without_timing(&self) -> BenchmarkReport {
        let mut r = self.clone();
        for i in &mut r.items {
            i.latency_ms = 0.0;
        }
        let zero = AggregateStats {
            avg: 0.0,
            std: 0.0,
            min: 0.0,
            max: 0.0,
            median: 0.0,
            n: r.latency.stats.n,
        };
        r.latency = LatencySummary {
            p50_ms: 0.0,
            p90_ms: 0.0,
            p99_ms: 0.0,
            stats: zero,
        };
        r
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Per-metric summary plus the pass/fail breakdown, as plain text.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<14}{:>8}{:>8}{:>8}{:>8}{:>8}{:>9}",
            "Metric", "Avg", "Std", "Min", "Max", "Median", "Samples"
        );
        for (name, s) in [
            ("Relevance", &self.relevance),
            ("Correctness", &self.correctness),
            ("Completeness", &self.completeness),
        ] {
            let _ = writeln!(
                out,
                "{:<14}{:>8.3}{:>8.3}{:>8.3}{:>8.3}{:>8.3}{:>9}",
                name, s.avg, s.std, s.min, s.max, s.median, s.n
            );
        }
        let q = &self.question_accuracy;
        let failed = q.total - q.passed;
        let pct = |n: u64| 100.0 * n as f64 / q.total as f64;
        out.push('\n');
        let _ = writeln!(out, "{:<14}{:>8}{:>8}", "All > 0.8", "Count", "%");
        let _ = writeln!(out, "{:<14}{:>8}{:>8.1}", "True", q.passed, pct(q.passed));
        let _ = writeln!(out, "{:<14}{:>8}{:>8.1}", "False", failed, pct(failed));
        let _ = writeln!(out, "Question-level accuracy: {:.3} ({}/{})", q.accuracy, q.passed, q.total);
        let l = &self.latency;
        let _ = writeln!(
            out,
            "Latency ms: p50 {:.1}  p90 {:.1}  p99 {:.1}  max {:.1}",
            l.p50_ms, l.p90_ms, l.p99_ms, l.stats.max
        );
        if self.failed_items > 0 {
            let _ = writeln!(out, "Failed items: {}", self.failed_items);
        }
        if !self.no_insight_items.is_empty() {
            let _ = writeln!(out, "Scored 0 for having no insights: {}", self.no_insight_items.join(", "));
        }
        out
    }
}

pub fn read_items(path: &Path) -> Result<Vec<BenchmarkItem>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let items: Vec<BenchmarkItem> = parse_jsonl(&text)?;
    for i in &items {
        i.check()?;
    }
    Ok(items)
}

pub fn read_annotations(path: &Path) -> Result<Vec<Annotation>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_jsonl(&text)
}

pub fn items_to_jsonl(items: &[BenchmarkItem]) -> Result<String> {
    let mut out = String::new();
    for i in items {
        out.push_str(&serde_json::to_string(i)?);
        out.push('\n');
    }
    Ok(out)
}

/// Keywords found in the answer: case-insensitive substring match, no
/// stemming.
pub fn addressed_keywords(item: &BenchmarkItem, answer: &str) -> Vec<String> {
    let lower = answer.to_lowercase();
    item.keywords
        .iter()
        .filter(|k| lower.contains(&k.to_lowercase()))
        .cloned()
        .collect()
}

fn fact_matches(fact: &SupportingFact, expected: &ExpectedFact) -> bool {
    fact.subject == expected.subject && fact.metric == expected.metric && (fact.value - expected.value).abs() <= expected.tolerance
}

/// The required-insight label of an expected fact.
pub fn insight_label(fact: &ExpectedFact) -> String {
    format!("{} for {}", fact.metric, fact.subject)
}

/// Machine annotation from the supporting facts: each fact is an insight,
/// correct if it matches a ground-truth fact; a required insight is covered
/// when its ground-truth fact is matched.
pub fn automatic_annotation(item: &BenchmarkItem, response: &ChatResponse) -> Annotation {
    let facts = &response.trace.supporting;
    let truth = item.ground_truth.as_deref().unwrap_or_default();
    let correct = facts.iter().filter(|f| truth.iter().any(|e| fact_matches(f, e))).count() as u64;
    let covered = item
        .required_insights
        .iter()
        .filter(|r| {
            truth
                .iter()
                .any(|e| &insight_label(e) == *r && facts.iter().any(|f| fact_matches(f, e)))
        })
        .count() as u64;
    Annotation {
        item_id: item.id.clone(),
        addressed_keywords: addressed_keywords(item, &response.answer),
        insights_in_response: facts.len() as u64,
        correct_insights: correct,
        required_covered: covered,
    }
}

fn refused(response: &ChatResponse) -> bool {
    response.branch == Branch::Refused || response.trace.scope.as_ref().is_some_and(|s| s.is_out())
}

fn score(item: &BenchmarkItem, response: &ChatResponse, human: Option<&Annotation>) -> Result<(Annotation, MetricReport, ScoreSource)> {
    if !item.in_scope {
        // An out-of-scope item passes exactly when it is refused.
        let v = Fraction::from_integer(u64::from(refused(response)));
        let ann = automatic_annotation(item, response);
        return Ok((ann, MetricReport::from_fractions(v, v, v, false), ScoreSource::Automatic));
    }
    let (ann, source) = match human {
        Some(a) => {
            a.check(item)?;
            (a.clone(), ScoreSource::Annotation)
        }
        None => (automatic_annotation(item, response), ScoreSource::Automatic),
    };
    let r = relevance(&ann, item)?;
    let (c, flagged) = correctness_or_zero(&ann);
    Ok((ann.clone(), MetricReport::from_fractions(r, c, completeness(&ann, item), flagged), source))
}

fn failed_result(item: &BenchmarkItem, response: Option<&ChatResponse>, error: ErrorInfo, latency_ms: f64) -> ItemResult {
    ItemResult {
        item_id: item.id.clone(),
        question: item.question.clone(),
        branch: response.map(|r| r.branch),
        answer: response.map(|r| r.answer.clone()).unwrap_or_default(),
        metrics: MetricReport::failed(),
        source: ScoreSource::Automatic,
        insights_in_response: 0,
        correct_insights: 0,
        required_covered: 0,
        error: Some(error),
        latency_ms,
    }
}

async fn run_item(backend: &dyn ChatBackend, item: &BenchmarkItem, human: Option<&Annotation>) -> ItemResult {
    let started = Instant::now();
    let session = SessionId::new(format!("bench-{}", item.id));
    let outcome = backend.chat(&item.question, &session).await;
    let latency_ms = started.elapsed().as_secs_f64() * 1000.0;
    let response = match outcome {
        Ok(r) => r,
        Err(e) => return failed_result(item, None, ErrorInfo::from(&e), latency_ms),
    };
    if let Some(e) = &response.trace.error {
        return failed_result(item, Some(&response), e.clone(), latency_ms);
    }
    match score(item, &response, human) {
        Ok((ann, metrics, source)) => ItemResult {
            item_id: item.id.clone(),
            question: item.question.clone(),
            branch: Some(response.branch),
            answer: response.answer,
            metrics,
            source,
            insights_in_response: ann.insights_in_response,
            correct_insights: ann.correct_insights,
            required_covered: ann.required_covered,
            error: None,
            latency_ms,
        },
        Err(e) => failed_result(item, Some(&response), ErrorInfo::from(&e), latency_ms),
    }
}

/// Runs every item (at most `concurrency` at once), scores it, and reduces
/// the results in item order. Per-item failures are recorded, not fatal.
pub async fn run_benchmark(
    backend: Arc<dyn ChatBackend>,
    items: &[BenchmarkItem],
    annotations: Option<&[Annotation]>,
    concurrency: usize,
) -> Result<BenchmarkReport> {
    if items.is_empty() {
        return Err(Error::EmptyInput);
    }
    let by_id: BTreeMap<&str, &Annotation> = annotations
        .unwrap_or_default()
        .iter()
        .map(|a| (a.item_id.as_str(), a))
        .collect();
    let permits = Arc::new(Semaphore::new(concurrency.max(1)));
    let mut tasks = JoinSet::new();
    for (idx, item) in items.iter().enumerate() {
        let (backend, permits, item) = (backend.clone(), permits.clone(), item.clone());
        let human = by_id.get(item.id.as_str()).map(|a| (*a).clone());
        tasks.spawn(async move {
            let _permit = permits.acquire_owned().await.expect("semaphore is never closed");
            (idx, run_item(backend.as_ref(), &item, human.as_ref()).await)
        });
    }
    let mut results: Vec<Option<ItemResult>> = vec![None; items.len()];
    while let Some(joined) = tasks.join_next().await {
        let (idx, r) = joined.map_err(|e| Error::Provider(format!("benchmark task failed: {e}")))?;
        results[idx] = Some(r);
    }
    let items: Vec<ItemResult> = results.into_iter().map(|r| r.expect("every item reported")).collect();
    summarize(items)
}

fn summarize(items: Vec<ItemResult>) -> Result<BenchmarkReport> {
    let col = |f: fn(&MetricReport) -> f64| items.iter().map(|i| f(&i.metrics)).collect::<Vec<_>>();
    let reports: Vec<MetricReport> = items.iter().map(|i| i.metrics.clone()).collect();
    let latencies: Vec<f64> = items.iter().map(|i| i.latency_ms).collect();
    Ok(BenchmarkReport {
        relevance: aggregate_stats(&col(|m| m.relevance))?,
        correctness: aggregate_stats(&col(|m| m.correctness))?,
        completeness: aggregate_stats(&col(|m| m.completeness))?,
        question_accuracy: question_accuracy(&reports)?,
        failed_items: items.iter().filter(|i| i.error.is_some()).count(),
        no_insight_items: items.iter().filter(|i| i.metrics.no_insights).map(|i| i.item_id.clone()).collect(),
        latency: LatencySummary {
            p50_ms: latency_percentile(&latencies, 50.0)?,
            p90_ms: latency_percentile(&latencies, 90.0)?,
            p99_ms: latency_percentile(&latencies, 99.0)?,
            stats: aggregate_stats(&latencies)?,
        },
        items,
    })
}
