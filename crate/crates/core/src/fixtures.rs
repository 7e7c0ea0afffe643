//! The deterministic demo and test fixture: a generated seller store, a
//! 20-item benchmark whose plans and answers are scripted, and extra valid
//! plans for validator tests.

use chrono::NaiveDate;
use serde_json::{json, Value};

use crate::dataplane::registry::Registry;
use crate::dataplane::store::{generate_store, SellerStore, DEFAULT_SELLER};
use crate::dataplane::Dataplane;
use crate::error::Result;
use crate::eval::BenchmarkItem;
use crate::llm::{ScriptedProvider, ScriptedRule};
use crate::manager::DateRange;
use crate::types::SellerContext;

pub const FIXTURE_SEED: u64 = 7;
pub const FIXTURE_PRODUCTS: usize = 30;

pub fn fixture_range() -> DateRange {
    DateRange::new(date(2023, 1, 1), date(2024, 9, 30)).expect("valid range")
}

pub fn fixture_today() -> NaiveDate {
    date(2024, 9, 10)
}

pub fn fixture_context() -> SellerContext {
    SellerContext::new(DEFAULT_SELLER, fixture_today())
}

pub fn fixture_store() -> Result<SellerStore> {
    generate_store(FIXTURE_SEED, FIXTURE_PRODUCTS, fixture_range())
}

pub fn fixture_dataplane() -> Result<Dataplane> {
    Ok(Dataplane::new(Registry::builtin(), fixture_store()?))
}

fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).expect("valid date")
}

/// What the scripted LLM does for one benchmark question.
#[derive(Debug, Clone)]
pub enum Script {
    /// Data presenter: the plan to return and the final answer text.
    Presenter { plan: Value, answer: &'static str },
    /// Insight generator: the domain label and the narrative.
    Insight { domain: &'static str, narrative: &'static str },
}

#[derive(Debug, Clone)]
pub struct FixtureItem {
    pub id: &'static str,
    pub question: &'static str,
    pub keywords: &'static [&'static str],
    pub script: Script,
}

fn api(id: &str, target: &str, start: &str, end: &str) -> Value {
    json!({"id": id, "kind": "api_call", "target": target, "payload": {"start_date": start, "end_date": end}, "inputs": []})
}

fn func(id: &str, target: &str, payload: Value, inputs: &[&str]) -> Value {
    json!({"id": id, "kind": "function_call", "target": target, "payload": payload, "inputs": inputs})
}

fn plan(steps: Vec<Value>, last: &str) -> Value {
    json!({"steps": steps, "final": last})
}

const AUG: (&str, &str) = ("2024-08-01", "2024-08-31");
const AUG_PRIOR: (&str, &str) = ("2023-08-01", "2023-08-31");
const JUL: (&str, &str) = ("2024-07-01", "2024-07-31");
const LAST_WEEK: (&str, &str) = ("2024-09-02", "2024-09-08");
const Q2: (&str, &str) = ("2024-04-01", "2024-06-30");
const SUMMER: (&str, &str) = ("2024-06-01", "2024-08-31");

fn presenter(id: &'static str, question: &'static str, keywords: &'static [&'static str], plan: Value, answer: &'static str) -> FixtureItem {
    FixtureItem {
        id,
        question,
        keywords,
        script: Script::Presenter { plan, answer },
    }
}

fn insight(
    id: &'static str,
    question: &'static str,
    keywords: &'static [&'static str],
    domain: &'static str,
    narrative: &'static str,
) -> FixtureItem {
    FixtureItem {
        id,
        question,
        keywords,
        script: Script::Insight { domain, narrative },
    }
}

/// The 20 fixture questions with their scripts. Ground truth is not stored
/// here; it is computed independently from the store.
pub fn fixture_items() -> Vec<FixtureItem> {
    vec![
        presenter(
            "b01",
            "what were my total sales last month",
            &["sales", "august 2024"],
            plan(vec![api("s1", "get_daily_totals", AUG.0, AUG.1), func("s2", "aggregate", json!({"column": "sales", "op": "sum"}), &["s1"])], "s2"),
            "Your total sales for August 2024 (2024-08-01 ~ 2024-08-31) are shown above.",
        ),
        presenter(
            "b02",
            "list the top 3 products by sales last month",
            &["top 3", "sales", "august 2024"],
            plan(vec![api("s1", "get_sales_by_product", AUG.0, AUG.1), func("s2", "top_k", json!({"by": "sales", "k": 3}), &["s1"])], "s2"),
            "Your top 3 products by sales for August 2024 (2024-08-01 ~ 2024-08-31) are listed above.",
        ),
        presenter(
            "b03",
            "how many units did I sell last week",
            &["units", "2024-09-02"],
            plan(vec![api("s1", "get_daily_totals", LAST_WEEK.0, LAST_WEEK.1), func("s2", "aggregate", json!({"column": "units", "op": "sum"}), &["s1"])], "s2"),
            "Units sold from 2024-09-02 to 2024-09-08 are shown above.",
        ),
        presenter(
            "b04",
            "what was the total traffic last month",
            &["page views", "august 2024"],
            plan(vec![api("s1", "get_daily_totals", AUG.0, AUG.1), func("s2", "aggregate", json!({"column": "page_views", "op": "sum"}), &["s1"])], "s2"),
            "Total page views for August 2024 (2024-08-01 ~ 2024-08-31) are shown above.",
        ),
        presenter(
            "b05",
            "get the bottom 3 products by sales for July 2024",
            &["bottom 3", "sales", "july 2024"],
            plan(vec![api("s1", "get_sales_by_product", JUL.0, JUL.1), func("s2", "top_k", json!({"by": "sales", "k": 3, "order": "asc"}), &["s1"])], "s2"),
            "The bottom 3 products by sales for July 2024 (2024-07-01 ~ 2024-07-31) are listed above.",
        ),
        presenter(
            "b06",
            "which 5 products had the highest page views last month",
            &["5 products", "page views", "conversion"],
            plan(vec![api("s1", "get_traffic_by_product", AUG.0, AUG.1), func("s2", "top_k", json!({"by": "page_views", "k": 5}), &["s1"])], "s2"),
            "These 5 products had the most page views in August 2024, shown with their conversion rates.",
        ),
        presenter(
            "b07",
            "break down sales by month in Q2",
            &["sales", "month", "2024-04"],
            plan(vec![api("s1", "get_monthly_totals", Q2.0, Q2.1)], "s1"),
            "Monthly sales from 2024-04 to 2024-06 are shown above.",
        ),
        presenter(
            "b08",
            "what was my best sales day last month",
            &["best", "sales day", "august 2024"],
            plan(vec![api("s1", "get_daily_totals", AUG.0, AUG.1), func("s2", "top_k", json!({"by": "sales", "k": 1}), &["s1"])], "s2"),
            "Your best sales day in August 2024 is shown above.",
        ),
        presenter(
            "b09",
            "what were the sales of product P007 last month",
            &["p007", "sales"],
            plan(vec![api("s1", "get_sales_by_product", AUG.0, AUG.1), func("s2", "filter", json!({"column": "product_id", "op": "eq", "value": "P007"}), &["s1"])], "s2"),
            "Sales of P007 for August 2024 are shown above.",
        ),
        presenter(
            "b10",
            "what was the conversion rate of product P012 last month",
            &["p012", "conversion rate"],
            plan(vec![api("s1", "get_traffic_by_product", AUG.0, AUG.1), func("s2", "filter", json!({"column": "product_id", "op": "eq", "value": "P012"}), &["s1"])], "s2"),
            "The conversion rate and page views of P012 for August 2024 are shown above.",
        ),
        presenter(
            "b11",
            "compare my sales last month with the same period last year",
            &["sales", "year over year", "august 2023"],
            plan(
                vec![
                    api("s1", "get_daily_totals", AUG.0, AUG.1),
                    api("s2", "get_daily_totals", AUG_PRIOR.0, AUG_PRIOR.1),
                    func("s3", "aggregate", json!({"column": "sales", "op": "sum"}), &["s1"]),
                    func("s4", "aggregate", json!({"column": "sales", "op": "sum"}), &["s2"]),
                    func("s5", "yoy_delta", json!({"value": "sales"}), &["s3", "s4"]),
                ],
                "s5",
            ),
            "Your August 2024 sales compared year over year with August 2023 are shown above.",
        ),
        presenter(
            "b12",
            "show weekly units sold last month",
            &["weekly", "units"],
            plan(
                vec![
                    api("s1", "get_daily_totals", AUG.0, AUG.1),
                    func("s2", "time_bucket", json!({"column": "date", "grain": "weekly", "values": ["units"]}), &["s1"]),
                ],
                "s2",
            ),
            "Weekly units sold for August 2024, by week starting Monday, are shown above.",
        ),
        presenter(
            "b13",
            "what were my monthly page views over the summer",
            &["monthly", "page views"],
            plan(
                vec![
                    api("s1", "get_daily_totals", SUMMER.0, SUMMER.1),
                    func("s2", "time_bucket", json!({"column": "date", "grain": "monthly", "values": ["page_views"]}), &["s1"]),
                ],
                "s2",
            ),
            "Monthly page views from 2024-06-01 to 2024-08-31 are shown above.",
        ),
        presenter(
            "b14",
            "list the top 10 products by sales in Q2",
            &["top 10", "sales", "2024-04-01"],
            plan(vec![api("s1", "get_sales_by_product", Q2.0, Q2.1), func("s2", "top_k", json!({"by": "sales", "k": 10}), &["s1"])], "s2"),
            "Your top 10 products by sales from 2024-04-01 to 2024-06-30 are listed above.",
        ),
        presenter(
            "b15",
            "what was the average selling price of my top 3 products by units last month",
            &["average selling price", "top 3", "units"],
            plan(vec![api("s1", "get_product_performance", AUG.0, AUG.1), func("s2", "top_k", json!({"by": "units", "k": 3}), &["s1"])], "s2"),
            "The average selling price of your top 3 products by units in August 2024 is shown above.",
        ),
        insight(
            "b16",
            "how does my business perform",
            &["sales", "conversion rate", "trend", "seasonality"],
            "performance",
            "Sales are compared with the same month last year above; the trend and seasonality lines show where the year is heading.",
        ),
        insight(
            "b17",
            "how is my business doing with respect to my benchmarks",
            &["peers", "conversion rate", "average selling price"],
            "benchmarking",
            "Compared with peers, the gaps above show which lever matters most: traffic, conversion or price.",
        ),
        insight(
            "b18",
            "what should I do to grow my sales",
            &["sales", "peers", "trend"],
            "recommendation",
            "Focus first on the metric that is furthest below peers, and keep an eye on the trend lines above.",
        ),
        insight(
            "b19",
            "how do I compare to similar sellers on conversion rate",
            &["conversion rate", "peers"],
            "benchmarking",
            "Your conversion rate relative to peers is shown above; product page quality is the main lever for closing any gap.",
        ),
        insight(
            "b20",
            "give me insights about my sales performance",
            &["sales", "trend"],
            "performance",
            "The year-over-year comparison and the monthly trend above summarize how sales are developing.",
        ),
    ]
}

/// Benchmark items without ground truth; keywords and required-insight
/// labels are filled by the caller that computes the truth.
pub fn fixture_benchmark_skeleton() -> Vec<BenchmarkItem> {
    fixture_items()
        .into_iter()
        .map(|f| BenchmarkItem {
            id: f.id.to_string(),
            question: f.question.to_string(),
            in_scope: true,
            keywords: f.keywords.iter().map(|k| k.to_string()).collect(),
            required_insights: Vec::new(),
            ground_truth: None,
        })
        .collect()
}

/// The frozen fixture benchmark with ground truth.
pub const FIXTURE_BENCHMARK: &str = include_str!("../fixtures/benchmark.jsonl");

fn key(task: &str, question: &str) -> String {
    format!("[task:{task}]\nQuestion: {question}\n")
}

/// Scripted rules answering every fixture question; scope checks answer
/// "in" for the fixture questions.
pub fn fixture_rules() -> Vec<ScriptedRule> {
    let mut rules = Vec::new();
    for f in fixture_items() {
        rules.push(ScriptedRule::contains(key("scope", f.question), "in"));
        match f.script {
            Script::Presenter { plan, answer } => {
                let text = format!("Fetch the data, then shape it.\n{}", serde_json::to_string(&plan).expect("plan serializes"));
                rules.push(ScriptedRule::contains(key("plan", f.question), text));
                rules.push(ScriptedRule::contains(key("present", f.question), answer));
            }
            Script::Insight { domain, narrative } => {
                rules.push(ScriptedRule::contains(key("domain", f.question), domain));
                rules.push(ScriptedRule::contains(key(&format!("insight:{domain}"), f.question), narrative));
            }
        }
    }
    rules
}

pub fn fixture_llm() -> ScriptedProvider {
    ScriptedProvider::new(fixture_rules())
}

/// Valid plans: the 15 presenter fixture plans plus five more shapes.
pub fn fixture_plans() -> Vec<Value> {
    let mut plans: Vec<Value> = fixture_items()
        .into_iter()
        .filter_map(|f| match f.script {
            Script::Presenter { plan, .. } => Some(plan),
            Script::Insight { .. } => None,
        })
        .collect();
    plans.push(plan(vec![json!({"id": "s1", "kind": "api_call", "target": "get_benchmarks", "payload": {}, "inputs": []})], "s1"));
    plans.push(plan(
        vec![
            json!({"id": "s1", "kind": "api_call", "target": "get_benchmarks", "payload": {"metric": "conversion"}, "inputs": []}),
        ],
        "s1",
    ));
    plans.push(plan(
        vec![
            api("s1", "get_product_performance", JUL.0, JUL.1),
            func("s2", "filter", json!({"column": "sales", "op": "gt", "value": 1000}), &["s1"]),
            func("s3", "aggregate", json!({"column": "units", "op": "count"}), &["s2"]),
        ],
        "s3",
    ));
    plans.push(plan(
        vec![
            api("s1", "get_daily_totals", SUMMER.0, SUMMER.1),
            func("s2", "time_bucket", json!({"column": "date", "grain": "monthly", "values": ["sales", "units"], "op": "sum"}), &["s1"]),
            func("s3", "top_k", json!({"by": "sales", "k": 1}), &["s2"]),
        ],
        "s3",
    ));
    plans.push(plan(
        vec![
            api("s1", "get_sales_by_product", AUG.0, AUG.1),
            api("s2", "get_sales_by_product", AUG_PRIOR.0, AUG_PRIOR.1),
            func("s3", "yoy_delta", json!({"value": "sales", "key": "product_id"}), &["s1", "s2"]),
            func("s4", "group_by", json!({"keys": ["product_id"], "column": "sales_yoy_delta", "op": "sum"}), &["s3"]),
        ],
        "s4",
    ));
    plans
}
