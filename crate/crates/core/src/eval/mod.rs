//! Benchmark corpus tooling and answer-quality metrics.

pub mod corpus;
pub mod metrics;

pub use corpus::{
    generate_corpus, parse_jsonl, split_corpus, supersample, Corpus, CorpusCounts, LabeledQuestion, QuestionClass,
    TemplateParaphraser,
};
pub use metrics::{
    aggregate_stats, completeness, correctness, correctness_or_zero, latency_percentile, question_accuracy, relevance,
    AggregateStats, Annotation, BenchmarkItem, ExpectedFact, Fraction, MetricReport, QuestionAccuracy,
};
pub mod benchmark;

pub use benchmark::{
    addressed_keywords, automatic_annotation, insight_label, items_to_jsonl, read_annotations, read_items, run_benchmark,
    BenchmarkReport, ChatBackend, EngineBackend, ItemResult, LatencySummary, ScoreSource,
};
