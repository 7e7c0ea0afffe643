//! Shared helpers for the integration tests: trained gate models (once per
//! test binary), the fixture engine and the oracle-backed benchmark.
#![allow(dead_code)]

pub mod oracle;
pub mod reference;
pub mod stubs;

use std::sync::{Arc, OnceLock};

use insight_core::config::EngineConfig;
use insight_core::embedding::{Embedder, HashingEmbedder};
use insight_core::eval::{generate_corpus, insight_label, BenchmarkItem, Corpus, CorpusCounts};
use insight_core::fixtures;
use insight_core::llm::LlmProvider;
use insight_core::manager::{OodModel, RouterModel, TrainedOod};
use insight_core::orchestrator::Engine;
use insight_core::training::{train_ood_on, train_router_on};

pub const CORPUS_SEED: u64 = 7;

pub struct Models {
    pub corpus: Corpus,
    pub ood: TrainedOod,
    pub router: RouterModel,
}

pub fn embedder() -> Arc<HashingEmbedder> {
    Arc::new(HashingEmbedder::default())
}

/// Gate models trained on the full 301-question gate view.
pub fn models() -> &'static Models {
    static M: OnceLock<Models> = OnceLock::new();
    M.get_or_init(|| {
        let corpus = generate_corpus(CORPUS_SEED, CorpusCounts::default()).unwrap();
        let view = corpus.gate_view();
        let e = HashingEmbedder::default();
        let cfg = EngineConfig::default();
        let ood = train_ood_on(&e, &view, &cfg.ood).unwrap();
        let router = train_router_on(&e, &view, &cfg.router).unwrap().model;
        Models { corpus, ood, router }
    })
}

pub fn ood_model() -> OodModel {
    models().ood.model.clone()
}

pub fn engine_with(config: EngineConfig, llm: Arc<dyn LlmProvider>) -> Arc<Engine> {
    let m = models();
    let e: Arc<dyn Embedder> = embedder();
    Arc::new(
        Engine::new(
            config,
            e,
            Arc::new(m.ood.model.clone()),
            Arc::new(m.router.clone()),
            llm,
            fixtures::fixture_dataplane().unwrap(),
        )
        .unwrap(),
    )
}

pub fn fixture_engine() -> Arc<Engine> {
    engine_with(EngineConfig::default(), Arc::new(fixtures::fixture_llm()))
}

/// The fixture items with oracle ground truth; every expected fact is a
/// required insight.
pub fn oracle_benchmark() -> Vec<BenchmarkItem> {
    let store = fixtures::fixture_store().unwrap();
    fixtures::fixture_benchmark_skeleton()
        .into_iter()
        .map(|mut item| {
            let truth = oracle::expected_facts(&store, &item.id);
            item.required_insights = truth.iter().map(insight_label).collect();
            item.ground_truth = Some(truth);
            item
        })
        .collect()
}
