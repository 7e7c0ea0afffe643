//! Training and evaluating the gate models on a labeled question corpus.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::embedding::{Embedder, Embedding};
use crate::error::{Error, Result};
use crate::eval::LabeledQuestion;
use crate::manager::{train_ood, train_router, OodConfig, OodModel, RouterConfig, RouterModel, TrainedOod, TrainedRouter};
use crate::types::Route;

pub fn embed_questions(embedder: &dyn Embedder, questions: &[LabeledQuestion]) -> Result<Vec<Embedding>> {
    questions.iter().map(|q| embedder.embed(&q.question)).collect()
}

/// Trains the autoencoder on the in-domain questions only.
pub fn train_ood_on(embedder: &dyn Embedder, questions: &[LabeledQuestion], cfg: &OodConfig) -> Result<TrainedOod> {
    let in_domain: Vec<LabeledQuestion> = questions.iter().filter(|q| q.class.is_in_domain()).cloned().collect();
    if in_domain.is_empty() {
        return Err(Error::InvalidInput("no in-domain questions to train on".into()));
    }
    let xs = embed_questions(embedder, &in_domain)?;
    train_ood(&xs, embedder.spec(), cfg)
}

/// Trains the router on the in-domain questions; out-of-domain ones are
/// skipped.
pub fn train_router_on(embedder: &dyn Embedder, questions: &[LabeledQuestion], cfg: &RouterConfig) -> Result<TrainedRouter> {
    let mut examples = Vec::new();
    for q in questions {
        if let Some(route) = q.class.route() {
            examples.push((embedder.embed(&q.question)?, route));
        }
    }
    train_router(&examples, embedder.spec(), cfg)
}

/// Detection quality with out-of-domain as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OodEvaluation {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub true_negatives: usize,
    pub precision: f64,
    pub recall: f64,
    /// Mean classification time per question, embedding excluded.
    pub mean_latency_ms: f64,
}

pub fn evaluate_ood(model: &OodModel, embedder: &dyn Embedder, questions: &[LabeledQuestion]) -> Result<OodEvaluation> {
    let xs = embed_questions(embedder, questions)?;
    let (mut tp, mut fp, mut fneg, mut tn) = (0, 0, 0, 0);
    let started = Instant::now();
    for (q, x) in questions.iter().zip(&xs) {
        let flagged = model.classify(x)?.is_out_of_domain();
        match (flagged, q.class.is_in_domain()) {
            (true, false) => tp += 1,
            (true, true) => fp += 1,
            (false, false) => fneg += 1,
            (false, true) => tn += 1,
        }
    }
    let elapsed = started.elapsed().as_secs_f64() * 1000.0;
    let ratio = |a: usize, b: usize| if a + b == 0 { 0.0 } else { a as f64 / (a + b) as f64 };
    Ok(OodEvaluation {
        true_positives: tp,
        false_positives: fp,
        false_negatives: fneg,
        true_negatives: tn,
        precision: ratio(tp, fp),
        recall: ratio(tp, fneg),
        mean_latency_ms: if questions.is_empty() { 0.0 } else { elapsed / questions.len() as f64 },
    })
}

/// Routing accuracy over the in-domain questions.
pub fn router_accuracy(model: &RouterModel, embedder: &dyn Embedder, questions: &[LabeledQuestion]) -> Result<f64> {
    let mut n = 0usize;
    let mut hit = 0usize;
    for q in questions {
        let Some(want) = q.class.route() else { continue };
        n += 1;
        let got: Route = model.route(&embedder.embed(&q.question)?)?.route;
        hit += usize::from(got == want);
    }
    if n == 0 {
        return Err(Error::InvalidInput("no in-domain questions to score".into()));
    }
    Ok(hit as f64 / n as f64)
}

/// Per-sample training reconstruction errors, one per line, in shortest
/// round-trip decimal form.
pub fn errors_to_text(errors: &[f64]) -> String {
    let mut out = String::with_capacity(errors.len() * 24);
    for e in errors {
        out.push_str(&format!("{e:?}\n"));
    }
    out
}

pub fn errors_from_text(text: &str) -> Result<Vec<f64>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.parse::<f64>()
                .map_err(|e| Error::Serialization(format!("bad error value '{l}': {e}")))
        })
        .collect()
}
