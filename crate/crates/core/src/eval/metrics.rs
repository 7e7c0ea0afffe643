//! Answer-quality metrics, computed as exact fractions and rendered as
//! decimals only at the edges.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Fraction = Ratio<u64>;

/// The strict pass bar for all three metrics.
pub fn pass_bar() -> Fraction {
    Fraction::new(4, 5)
}

/// Expected values for one item: metric name to value, per subject.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectedFact {
    pub subject: String,
    pub metric: String,
    pub value: f64,
    /// Absolute tolerance for matching a supporting fact.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_tolerance() -> f64 {
    1e-6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkItem {
    pub id: String,
    pub question: String,
    #[serde(default = "default_true")]
    pub in_scope: bool,
    #[serde(default)]
    pub keywords: Vec<String>,
    #[serde(default)]
    pub required_insights: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<Vec<ExpectedFact>>,
}

fn default_true() -> bool {
    true
}

impl BenchmarkItem {
    pub fn check(&self) -> Result<()> {
        if self.in_scope && self.keywords.is_empty() {
            return Err(Error::InvalidInput(format!("item {}: in-scope items need keywords", self.id)));
        }
        Ok(())
    }
}

/// Human (or machine) judgement of one response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub item_id: String,
    #[serde(default)]
    pub addressed_keywords: Vec<String>,
    pub insights_in_response: u64,
    pub correct_insights: u64,
    pub required_covered: u64,
}

impl Annotation {
    pub fn check(&self, item: &BenchmarkItem) -> Result<()> {
        if self.correct_insights > self.insights_in_response {
            return Err(Error::InvalidInput(format!(
                "annotation {}: {} correct of {} insights",
                self.item_id, self.correct_insights, self.insights_in_response
            )));
        }
        if self.required_covered > item.required_insights.len() as u64 {
            return Err(Error::InvalidInput(format!(
                "annotation {}: {} required insights covered of {}",
                self.item_id,
                self.required_covered,
                item.required_insights.len()
            )));
        }
        if let Some(k) = self.addressed_keywords.iter().find(|k| !item.keywords.contains(k)) {
            return Err(Error::InvalidInput(format!("annotation {}: keyword {k:?} is not in the item", self.item_id)));
        }
        Ok(())
    }
}

/// Addressed keywords over all keywords. Duplicates in `addressed` count
/// once.
pub fn relevance(ann: &Annotation, item: &BenchmarkItem) -> Result<Fraction> {
    if item.keywords.is_empty() {
        return Err(Error::NoKeywords);
    }
    let hit = item.keywords.iter().filter(|k| ann.addressed_keywords.contains(k)).count() as u64;
    Ok(Fraction::new(hit, item.keywords.len() as u64))
}

/// Correct insights over insights in the response. Undefined at zero
/// insights; callers use [`correctness_or_zero`] for the 0.0 convention.
pub fn correctness(ann: &Annotation) -> Result<Fraction> {
    if ann.insights_in_response == 0 {
        return Err(Error::NoInsights);
    }
    Ok(Fraction::new(ann.correct_insights.min(ann.insights_in_response), ann.insights_in_response))
}

/// Returns the score and whether the zero-insight convention applied.
pub fn correctness_or_zero(ann: &Annotation) -> (Fraction, bool) {
    match correctness(ann) {
        Ok(f) => (f, false),
        Err(_) => {
            tracing::info!(item = %ann.item_id, "response has no insights; correctness scored 0");
            (Fraction::from_integer(0), true)
        }
    }
}

/// Covered over required; 1 when nothing is required.
pub fn completeness(ann: &Annotation, item: &BenchmarkItem) -> Fraction {
    let n = item.required_insights.len() as u64;
    if n == 0 {
        return Fraction::from_integer(1);
    }
    Fraction::new(ann.required_covered.min(n), n)
}

fn to_f64(f: Fraction) -> f64 {
    *f.numer() as f64 / *f.denom() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub relevance: f64,
    pub correctness: f64,
    pub completeness: f64,
    pub question_pass: bool,
    /// The same scores as exact fractions, e.g. "5/11".
    pub exact: [String; 3],
    /// Correctness was scored 0 because the response had no insights.
    #[serde(default)]
    pub no_insights: bool,
}

impl MetricReport {
    pub fn from_fractions(relevance: Fraction, correctness: Fraction, completeness: Fraction, no_insights: bool) -> Self {
        let bar = pass_bar();
        MetricReport {
            relevance: to_f64(relevance),
            correctness: to_f64(correctness),
            completeness: to_f64(completeness),
            question_pass: relevance > bar && correctness > bar && completeness > bar,
            exact: [relevance, correctness, completeness].map(|f| format!("{}/{}", f.numer(), f.denom())),
            no_insights,
        }
    }

    pub fn score(ann: &Annotation, item: &BenchmarkItem) -> Result<Self> {
        let r = relevance(ann, item)?;
        let (c, flagged) = correctness_or_zero(ann);
        Ok(Self::from_fractions(r, c, completeness(ann, item), flagged))
    }

    /// A failed item: all scores zero.
    pub fn failed() -> Self {
        let z = Fraction::from_integer(0);
        Self::from_fractions(z, z, z, false)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionAccuracy {
    pub passed: u64,
    pub total: u64,
    pub accuracy: f64,
    pub exact: String,
}

pub fn question_accuracy(reports: &[MetricReport]) -> Result<QuestionAccuracy> {
    if reports.is_empty() {
        return Err(Error::EmptyInput);
    }
    let passed = reports.iter().filter(|r| r.question_pass).count() as u64;
    let total = reports.len() as u64;
    let f = Fraction::new(passed, total);
    Ok(QuestionAccuracy {
        passed,
        total,
        accuracy: to_f64(f),
        exact: format!("{}/{}", f.numer(), f.denom()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateStats {
    pub avg: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub median: f64,
    pub n: usize,
}

/// Mean, population standard deviation, extremes and midpoint median.
pub fn aggregate_stats(values: &[f64]) -> Result<AggregateStats> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("statistics over non-finite values".into()));
    }
    let n = values.len();
    let (avg, std) = crate::manager::ood::mean_and_population_std(values);
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    };
    Ok(AggregateStats {
        avg,
        std,
        min: sorted[0],
        max: sorted[n - 1],
        median,
        n,
    })
}

/// Nearest-rank percentile: the smallest sample with at least `p` percent
/// of samples at or below it.
pub fn latency_percentile(samples_ms: &[f64], p: f64) -> Result<f64> {
    if samples_ms.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(p > 0.0 && p < 100.0) {
        return Err(Error::InvalidInput(format!("percentile {p} is outside (0, 100)")));
    }
    let mut sorted = samples_ms.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = (p / 100.0 * sorted.len() as f64).ceil() as usize;
    Ok(sorted[rank.clamp(1, sorted.len()) - 1])
}
