//! Synthetic labelled question corpus for training and evaluating the
//! manager's gate and router, plus paraphrase super-sampling.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use async_trait::async_trait;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::llm::template::render;
use crate::llm::{CompletionRequest, LlmClient, LlmProvider, PromptLibrary};
use crate::rng::{seeded_rng, SeededRng};
use crate::types::Route;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionClass {
    Presenter,
    Insight,
    OutOfDomain,
}

impl QuestionClass {
    pub const ALL: [QuestionClass; 3] = [QuestionClass::Presenter, QuestionClass::Insight, QuestionClass::OutOfDomain];

    pub fn as_str(self) -> &'static str {
        match self {
            QuestionClass::Presenter => "presenter",
            QuestionClass::Insight => "insight",
            QuestionClass::OutOfDomain => "out_of_domain",
        }
    }

    pub fn route(self) -> Option<Route> {
        match self {
            QuestionClass::Presenter => Some(Route::Presenter),
            QuestionClass::Insight => Some(Route::InsightGenerator),
            QuestionClass::OutOfDomain => None,
        }
    }

    pub fn is_in_domain(self) -> bool {
        self != QuestionClass::OutOfDomain
    }
}

impl std::fmt::Display for QuestionClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledQuestion {
    pub question: String,
    pub class: QuestionClass,
}

/// Per-class question counts. `stated_in_domain` is the published in-domain
/// total, which disagrees with presenter + insight (178 vs 179); both are
/// kept as given and the mismatch is reported, not reconciled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusCounts {
    pub presenter: usize,
    pub insight: usize,
    pub out_of_domain: usize,
    pub stated_in_domain: usize,
}

impl Default for CorpusCounts {
    fn default() -> Self {
        CorpusCounts {
            presenter: 120,
            insight: 59,
            out_of_domain: 123,
            stated_in_domain: 178,
        }
    }
}

impl CorpusCounts {
    pub fn uniform(n: usize) -> Self {
        CorpusCounts {
            presenter: n,
            insight: n,
            out_of_domain: n,
            stated_in_domain: 2 * n,
        }
    }

    pub fn get(&self, class: QuestionClass) -> usize {
        match class {
            QuestionClass::Presenter => self.presenter,
            QuestionClass::Insight => self.insight,
            QuestionClass::OutOfDomain => self.out_of_domain,
        }
    }

    /// Difference between the per-class in-domain sum and the stated total.
    pub fn in_domain_discrepancy(&self) -> i64 {
        (self.presenter + self.insight) as i64 - self.stated_in_domain as i64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub seed: u64,
    pub counts: CorpusCounts,
    pub questions: Vec<LabeledQuestion>,
}

impl Corpus {
    pub fn of_class(&self, class: QuestionClass) -> impl Iterator<Item = &LabeledQuestion> {
        self.questions.iter().filter(move |q| q.class == class)
    }

    pub fn class_counts(&self) -> BTreeMap<QuestionClass, usize> {
        let mut m = BTreeMap::new();
        for q in &self.questions {
            *m.entry(q.class).or_insert(0) += 1;
        }
        m
    }

    /// The gate's view: the first `stated_in_domain` in-domain questions in
    /// corpus order plus every out-of-domain one (178 + 123 = 301 by
    /// default). The router uses the per-class counts instead.
    pub fn gate_view(&self) -> Vec<LabeledQuestion> {
        let mut in_domain: Vec<LabeledQuestion> =
            self.questions.iter().filter(|q| q.class.is_in_domain()).cloned().collect();
        in_domain.truncate(self.counts.stated_in_domain);
        in_domain.extend(self.of_class(QuestionClass::OutOfDomain).cloned());
        in_domain
    }

    /// One labelled question per line.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for q in &self.questions {
            out.push_str(&serde_json::to_string(q)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_jsonl()?).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }

    pub fn read_jsonl(path: &Path) -> Result<Vec<LabeledQuestion>> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        parse_jsonl(&text)
    }
}

/// Parses JSON lines, skipping blank lines. Errors name the line.
pub fn parse_jsonl<T: serde::de::DeserializeOwned>(text: &str) -> Result<Vec<T>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::Serialization(format!("line {}: {e}", i + 1))))
        .collect()
}

const METRICS: &[&str] = &[
    "sales",
    "revenue",
    "units sold",
    "page views",
    "traffic",
    "conversion rate",
    "average selling price",
    "orders",
];
const PERIODS: &[&str] = &[
    "last month",
    "last week",
    "this month",
    "this week",
    "last year",
    "this year",
    "yesterday",
    "in August",
    "in Q2",
    "from 2024-01-01 to 2024-03-31",
    "over the last 30 days",
    "for July 2024",
];
const COUNTS: &[&str] = &["3", "5", "10", "20", "three", "five", "ten"];
const CHANGES: &[&str] = &["drop", "decline", "fall", "go down", "increase", "go up", "jump", "change"];

const PRESENTER: &[&str] = &[
    "what were my {metric} {period}",
    "show my {metric} {period}",
    "what were my {metric} and {metric2} for the top {k} products {period}",
    "list the top {k} products by {metric} {period}",
    "which {k} products had the highest {metric} {period}",
    "which products had the lowest {metric} {period}",
    "give me daily {metric} {period}",
    "what was the total {metric} {period}",
    "how many units did I sell {period}",
    "what was the {metric} of product {pid} {period}",
    "show {metric} by product {period}",
    "compare my {metric} {period} with the same period last year",
    "what is the year over year change in {metric} {period}",
    "break down {metric} by month {period}",
    "what were my monthly {metric} {period}",
    "get the bottom {k} products by {metric} {period}",
    "how much {metric} did product {pid} get {period}",
    "table of {metric} and {metric2} per product {period}",
];

const INSIGHT: &[&str] = &[
    "how does my business perform",
    "how is my business doing {period}",
    "how is my business doing with respect to my benchmarks",
    "why did my {metric} {change} {period}",
    "what is driving the {change} in my {metric}",
    "how do I compare to similar sellers on {metric}",
    "how does my {metric} compare with peers",
    "am I above or below the benchmark for {metric}",
    "what should I do to grow my {metric}",
    "what can I do to improve my {metric}",
    "any recommendations to boost my {metric}",
    "are my {metric} seasonal",
    "what trends do you see in my {metric}",
    "give me insights about my {metric} performance",
    "explain my business performance {period}",
    "is my store healthy compared to the benchmark",
    "what is the trend of my {metric} over the year",
    "which months are my best for {metric}",
    "summarize how my shop performed {period} and why",
];

const CITIES: &[&str] = &["Tokyo", "Paris", "Seattle", "Berlin", "Lagos", "Lima", "Oslo", "Mumbai"];
const DISHES: &[&str] = &["lasagna", "pad thai", "banana bread", "ramen", "tacos", "paella", "pancakes"];
const TOPICS: &[&str] = &["the ocean", "friendship", "autumn", "dragons", "space travel", "cats", "the moon"];
const COUNTRIES: &[&str] = &["Peru", "Kenya", "Norway", "Vietnam", "Canada", "Chile", "Egypt"];
const SPORTS: &[&str] = &["football", "basketball", "cricket", "tennis", "hockey", "baseball"];
const LANGS: &[&str] = &["Spanish", "French", "German", "Japanese", "Italian", "Swahili"];
const TASKS: &[&str] = &[
    "reverse a string",
    "sort a list",
    "read a file",
    "parse json",
    "open a socket",
    "center a div",
];
const DAYS: &[&str] = &["today", "tomorrow", "tonight", "this weekend", "on Friday", "yesterday"];

const OUT_OF_DOMAIN: &[&str] = &[
    "what is the weather in {city} {day}",
    "will it rain in {city} {day}",
    "give me a recipe for {dish}",
    "how long should I bake {dish}",
    "who won the {sport} game {day}",
    "write a poem about {topic}",
    "tell me a joke about {topic}",
    "how do I {task} in python",
    "what is the capital of {country}",
    "translate good morning into {lang}",
    "recommend a movie about {topic}",
    "what time is it in {city}",
    "how far is {city} from {city2}",
    "explain quantum physics to a child",
    "who painted the mona lisa",
    "what is the population of {country}",
    "book a flight to {city} {day}",
    "how do I fix a flat bicycle tire",
    "what are the rules of {sport}",
    "suggest a name for my dog",
    "how many calories are in {dish}",
    "teach me {lang} grammar",
];

fn fill(template: &str, rng: &mut SeededRng) -> String {
    let pick = |rng: &mut SeededRng, xs: &[&'static str]| *xs.choose(rng).expect("non-empty vocabulary");
    let metric = pick(rng, METRICS);
    let metric2 = loop {
        let m = pick(rng, METRICS);
        if m != metric {
            break m;
        }
    };
    let city = pick(rng, CITIES);
    let city2 = loop {
        let c = pick(rng, CITIES);
        if c != city {
            break c;
        }
    };
    let n = rng.gen_range(1..=30);
    template
        .replace("{metric2}", metric2)
        .replace("{metric}", metric)
        .replace("{period}", pick(rng, PERIODS))
        .replace("{k}", pick(rng, COUNTS))
        .replace("{pid}", &format!("P{n:03}"))
        .replace("{change}", pick(rng, CHANGES))
        .replace("{city2}", city2)
        .replace("{city}", city)
        .replace("{dish}", pick(rng, DISHES))
        .replace("{topic}", pick(rng, TOPICS))
        .replace("{country}", pick(rng, COUNTRIES))
        .replace("{sport}", pick(rng, SPORTS))
        .replace("{lang}", pick(rng, LANGS))
        .replace("{task}", pick(rng, TASKS))
        .replace("{day}", pick(rng, DAYS))
}

fn templates(class: QuestionClass) -> &'static [&'static str] {
    match class {
        QuestionClass::Presenter => PRESENTER,
        QuestionClass::Insight => INSIGHT,
        QuestionClass::OutOfDomain => OUT_OF_DOMAIN,
    }
}

/// Template-filled questions, unique per class (case-insensitively) and
/// deterministic per seed. Classes are generated from independent RNG
/// streams, so changing one count does not perturb the others.
pub fn generate_corpus(seed: u64, counts: CorpusCounts) -> Result<Corpus> {
    let mut questions = Vec::new();
    let mut seen = HashSet::new();
    for class in QuestionClass::ALL {
        let want = counts.get(class);
        if want == 0 {
            return Err(Error::InvalidInput(format!("class {class} needs at least one question")));
        }
        let mut rng = seeded_rng(seed, &format!("corpus:{class}"));
        let ts = templates(class);
        let mut produced = 0;
        let mut attempts = 0usize;
        // Cycle templates first so every template is represented, then
        // sample freely.
        while produced < want {
            let t = if attempts < ts.len() { ts[attempts] } else { ts[rng.gen_range(0..ts.len())] };
            attempts += 1;
            let q = fill(t, &mut rng);
            if seen.insert(q.to_lowercase()) {
                questions.push(LabeledQuestion { question: q, class });
                produced += 1;
            } else if attempts > want * 200 {
                return Err(Error::InsufficientVariation {
                    class: class.to_string(),
                    produced,
                    target: want,
                });
            }
        }
    }
    if counts.in_domain_discrepancy() != 0 {
        tracing::info!(
            presenter = counts.presenter,
            insight = counts.insight,
            stated = counts.stated_in_domain,
            "per-class in-domain counts do not sum to the stated in-domain total"
        );
    }
    Ok(Corpus { seed, counts, questions })
}

/// Stratified split: `holdout_fraction` of each class (rounded down) goes to
/// the second half after a seeded shuffle.
pub fn split_corpus(
    questions: &[LabeledQuestion],
    holdout_fraction: f64,
    seed: u64,
) -> Result<(Vec<LabeledQuestion>, Vec<LabeledQuestion>)> {
    if !(0.0..1.0).contains(&holdout_fraction) {
        return Err(Error::InvalidInput("holdout_fraction must be in [0, 1)".into()));
    }
    let mut train = Vec::new();
    let mut held = Vec::new();
    for class in QuestionClass::ALL {
        let mut xs: Vec<LabeledQuestion> = questions.iter().filter(|q| q.class == class).cloned().collect();
        xs.shuffle(&mut seeded_rng(seed, &format!("split:{class}")));
        let k = (xs.len() as f64 * holdout_fraction).floor() as usize;
        held.extend(xs.drain(..k));
        train.extend(xs);
    }
    Ok((train, held))
}

fn normalize(q: &str) -> String {
    q.trim().to_lowercase()
}

/// Consecutive duplicate paraphrases tolerated before giving up on a class.
pub const SUPERSAMPLE_PATIENCE: usize = 50;

/// Grows every class to `target_per_class` with LLM paraphrases of its own
/// questions, rejecting case-insensitive duplicates. Classes already at the
/// target are returned unchanged; output keeps input order, then new
/// questions in generation order.
pub async fn supersample(
    llm: &LlmClient,
    prompts: &PromptLibrary,
    questions: &[LabeledQuestion],
    target_per_class: usize,
) -> Result<Vec<LabeledQuestion>> {
    let template = prompts.get("paraphrase")?;
    let mut out = questions.to_vec();
    let mut seen: HashSet<String> = questions.iter().map(|q| normalize(&q.question)).collect();
    for class in QuestionClass::ALL {
        let sources: Vec<String> = questions.iter().filter(|q| q.class == class).map(|q| q.question.clone()).collect();
        if sources.is_empty() {
            continue;
        }
        if target_per_class < sources.len() {
            return Err(Error::InvalidInput(format!(
                "target {target_per_class} is below the {} existing {class} questions",
                sources.len()
            )));
        }
        let mut have = sources.len();
        let mut misses = 0;
        let mut variant = 0usize;
        while have < target_per_class {
            let source = &sources[variant % sources.len()];
            variant += 1;
            let prompt = render(template, &[("question", source), ("variant", &variant.to_string())])?;
            let text = llm.complete(prompt).await?;
            let line = text.lines().map(str::trim).find(|l| !l.is_empty()).unwrap_or("").to_string();
            if !line.is_empty() && seen.insert(normalize(&line)) {
                out.push(LabeledQuestion { question: line, class });
                have += 1;
                misses = 0;
            } else {
                misses += 1;
                if misses >= SUPERSAMPLE_PATIENCE.max(sources.len()) {
                    return Err(Error::InsufficientVariation {
                        class: class.to_string(),
                        produced: have,
                        target: target_per_class,
                    });
                }
            }
        }
    }
    Ok(out)
}

const LEADS: &[&str] = &["", "please ", "can you tell me ", "quick question: ", "I'd like to know ", "help me understand "];
const TAILS: &[&str] = &["", " please", " thanks", " for my store", " for my shop", " if possible"];
const SWAPS: &[(&str, &str)] = &[
    ("what were", "what was"),
    ("show", "display"),
    ("list", "show me"),
    ("give me", "I need"),
    ("how is", "how's"),
    ("my business", "my store"),
    ("products", "items"),
    ("sales", "revenue"),
    ("traffic", "page views"),
    ("compare", "contrast"),
    ("grow", "increase"),
    ("improve", "raise"),
    ("what is", "what's"),
    ("weather", "forecast"),
    ("recipe", "method"),
];

/// Offline paraphraser for super-sampling without a hosted model: applies a
/// variant-seeded combination of lead-ins, tails and phrase swaps to the
/// `Source:` line of a paraphrase prompt.
#[derive(Debug, Clone, Default)]
pub struct TemplateParaphraser;

impl TemplateParaphraser {
    pub fn paraphrase(source: &str, variant: u64) -> String {
        let mut rng = seeded_rng(variant, &format!("paraphrase:{source}"));
        let mut q = source.to_string();
        for (a, b) in SWAPS {
            if q.contains(a) && rng.gen_bool(0.5) {
                q = q.replacen(a, b, 1);
            }
        }
        let lead = LEADS.choose(&mut rng).expect("non-empty");
        let tail = TAILS.choose(&mut rng).expect("non-empty");
        format!("{lead}{q}{tail}")
    }
}

#[async_trait]
impl LlmProvider for TemplateParaphraser {
    fn name(&self) -> &str {
        "template-paraphraser"
    }

    async fn complete(&self, req: &CompletionRequest) -> Result<String> {
        let field = |name: &str| {
            req.prompt
                .lines()
                .find_map(|l| l.strip_prefix(name))
                .map(str::trim)
                .ok_or_else(|| Error::Provider(format!("paraphrase prompt has no {name:?} line")))
        };
        let source = field("Source:")?;
        let variant = field("Variant:")?.parse::<u64>().unwrap_or(0);
        Ok(Self::paraphrase(source, variant))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{ScriptedProvider, ScriptedRule};
    use std::sync::Arc;
    use std::time::Duration;

    #[test]
    fn default_counts_and_labels() {
        let c = generate_corpus(11, CorpusCounts::default()).unwrap();
        let counts = c.class_counts();
        assert_eq!(counts[&QuestionClass::Presenter], 120);
        assert_eq!(counts[&QuestionClass::Insight], 59);
        assert_eq!(counts[&QuestionClass::OutOfDomain], 123);
        assert_eq!(c.questions.len(), 302);
        assert_eq!(c.counts.stated_in_domain, 178);
        assert_eq!(c.counts.in_domain_discrepancy(), 1);
        let gate = c.gate_view();
        assert_eq!(gate.len(), 301);
        assert_eq!(gate.iter().filter(|q| q.class.is_in_domain()).count(), 178);
    }

    #[test]
    fn deterministic_and_unique() {
        let a = generate_corpus(5, CorpusCounts::default()).unwrap();
        let b = generate_corpus(5, CorpusCounts::default()).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.questions, generate_corpus(6, CorpusCounts::default()).unwrap().questions);
        let uniq: HashSet<String> = a.questions.iter().map(|q| q.question.to_lowercase()).collect();
        assert_eq!(uniq.len(), a.questions.len());
        assert!(a.questions.iter().all(|q| !q.question.contains('{')));
    }

    #[test]
    fn tiny_counts() {
        let c = generate_corpus(1, CorpusCounts::uniform(1)).unwrap();
        assert_eq!(c.questions.len(), 3);
        assert!(generate_corpus(1, CorpusCounts { insight: 0, ..CorpusCounts::default() }).is_err());
    }

    #[test]
    fn jsonl_round_trip() {
        let c = generate_corpus(2, CorpusCounts::uniform(4)).unwrap();
        let back: Vec<LabeledQuestion> = parse_jsonl(&c.to_jsonl().unwrap()).unwrap();
        assert_eq!(back, c.questions);
        assert!(c.to_jsonl().unwrap().contains("\"class\":\"out_of_domain\""));
    }

    #[test]
    fn split_is_stratified() {
        let c = generate_corpus(3, CorpusCounts::default()).unwrap();
        let (train, held) = split_corpus(&c.questions, 0.2, 9).unwrap();
        assert_eq!(train.len() + held.len(), c.questions.len());
        assert_eq!(held.iter().filter(|q| q.class == QuestionClass::Presenter).count(), 24);
        assert_eq!(held.iter().filter(|q| q.class == QuestionClass::OutOfDomain).count(), 24);
    }

    fn client(p: impl LlmProvider + 'static) -> LlmClient {
        LlmClient::new(Arc::new(p), Duration::from_secs(5))
    }

    #[tokio::test]
    async fn supersample_to_target() {
        let c = generate_corpus(4, CorpusCounts::default()).unwrap();
        let presenters: Vec<_> = c.of_class(QuestionClass::Presenter).cloned().collect();
        let out = supersample(&client(TemplateParaphraser), &PromptLibrary::builtin(), &presenters, 300)
            .await
            .unwrap();
        assert_eq!(out.len(), 300);
        assert_eq!(&out[..120], &presenters[..]);
        let uniq: HashSet<String> = out.iter().map(|q| normalize(&q.question)).collect();
        assert_eq!(uniq.len(), 300);
        assert!(out.iter().all(|q| q.class == QuestionClass::Presenter));
        let again = supersample(&client(TemplateParaphraser), &PromptLibrary::builtin(), &presenters, 300)
            .await
            .unwrap();
        assert_eq!(out, again);
    }

    #[tokio::test]
    async fn supersample_noop_at_target() {
        let c = generate_corpus(4, CorpusCounts::uniform(5)).unwrap();
        let out = supersample(&client(ScriptedProvider::default()), &PromptLibrary::builtin(), &c.questions, 5)
            .await
            .unwrap();
        assert_eq!(out, c.questions);
    }

    #[tokio::test]
    async fn constant_provider_runs_dry() {
        let c = generate_corpus(4, CorpusCounts::uniform(5)).unwrap();
        let llm = client(ScriptedProvider::new(vec![ScriptedRule::contains("[task:paraphrase]", "same thing")]));
        let err = supersample(&llm, &PromptLibrary::builtin(), &c.questions, 10).await.unwrap_err();
        assert!(matches!(err, Error::InsufficientVariation { produced: 6, target: 10, .. }), "{err:?}");
    }
}
