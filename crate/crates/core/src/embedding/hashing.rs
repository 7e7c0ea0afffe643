use super::{Embedder, EmbedderSpec, Embedding, DEFAULT_DIMENSION};
use crate::error::{Error, Result};
use crate::rng::fnv1a64;

/// Signed feature hashing over lowercase word uni-, bi- and tri-grams.
///
/// Each n-gram hashes (FNV-1a) to a bucket, and an independent bit of the
/// hash picks the sign, so collisions cancel in expectation. Longer n-grams
/// get smaller weights so that shared vocabulary dominates similarity.
#[derive(Debug, Clone)]
pub struct HashingEmbedder {
    spec: EmbedderSpec,
}

const NGRAM_WEIGHTS: [f64; 3] = [1.0, 0.5, 0.25];

impl HashingEmbedder {
    pub fn new(dimension: usize) -> Self {
        assert!(dimension > 0, "embedding dimension must be positive");
        HashingEmbedder {
            spec: EmbedderSpec {
                name: format!("hashing-ngram3-d{dimension}"),
                dimension,
            },
        }
    }

    fn add_feature(&self, acc: &mut [f64], feature: &str, weight: f64) {
        let h = fnv1a64(feature.as_bytes());
        let bucket = (h % self.spec.dimension as u64) as usize;
        let sign = if (h >> 63) & 1 == 1 { -1.0 } else { 1.0 };
        acc[bucket] += sign * weight;
    }
}

impl Default for HashingEmbedder {
    fn default() -> Self {
        HashingEmbedder::new(DEFAULT_DIMENSION)
    }
}

/// Lowercases and splits on anything that is not alphanumeric.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
        .collect()
}

impl Embedder for HashingEmbedder {
    fn spec(&self) -> &EmbedderSpec {
        &self.spec
    }

    fn embed(&self, text: &str) -> Result<Embedding> {
        let trimmed = text.trim();
        if trimmed.is_empty() {
            return Err(Error::EmptyText);
        }
        let mut tokens = tokenize(trimmed);
        if tokens.is_empty() {
            // Pure punctuation still needs a deterministic vector.
            tokens.push(trimmed.to_lowercase());
        }
        let mut acc = vec![0.0; self.spec.dimension];
        for (n, weight) in NGRAM_WEIGHTS.iter().enumerate() {
            for window in tokens.windows(n + 1) {
                let feature = window.join(" ");
                self.add_feature(&mut acc, &feature, *weight);
            }
        }
        if acc.iter().all(|v| *v == 0.0) {
            // Signed collisions cancelled everything out; fall back to the
            // unsigned bucket of the whole text.
            let h = fnv1a64(trimmed.to_lowercase().as_bytes());
            acc[(h % self.spec.dimension as u64) as usize] = 1.0;
        }
        Embedding::from_raw(acc)
    }
}
