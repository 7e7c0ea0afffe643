//! Text embedding providers.
//!
//! Every provider returns unit-norm vectors of a fixed dimension. The
//! built-in [`HashingEmbedder`] needs no model files; [`HttpEmbedder`] adapts
//! an external model server.

mod hashing;
mod http;

pub use hashing::{tokenize, HashingEmbedder};
pub use http::HttpEmbedder;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_DIMENSION: usize = 256;

/// Unit-norm embedding vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Embedding(Vec<f64>);

impl Embedding {
    /// Normalizes `values` to unit length. Rejects empty, all-zero and
    /// non-finite input.
    pub fn from_raw(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("embedding has no components".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("embedding has non-finite components".into()));
        }
        let norm = l2_norm(&values);
        if norm == 0.0 {
            return Err(Error::InvalidInput("embedding is the zero vector".into()));
        }
        for v in &mut values {
            *v /= norm;
        }
        Ok(Embedding(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn dot(&self, other: &Embedding) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    /// Cosine similarity; equal to the dot product for unit vectors.
    pub fn cosine(&self, other: &Embedding) -> f64 {
        self.dot(other)
    }

    pub fn check_dim(&self, expected: usize) -> Result<()> {
        if self.dim() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: self.dim(),
            });
        }
        Ok(())
    }
}

impl TryFrom<Vec<f64>> for Embedding {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Embedding::from_raw(v)
    }
}

impl From<Embedding> for Vec<f64> {
    fn from(e: Embedding) -> Self {
        e.0
    }
}

pub fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbedderSpec {
    pub name: String,
    pub dimension: usize,
}

/// Text-to-vector provider. Implementations must be safe to call from many
/// threads at once.
pub trait Embedder: Send + Sync {
    fn spec(&self) -> &EmbedderSpec;

    fn embed(&self, text: &str) -> Result<Embedding>;

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Embedding>> {
        texts.iter().map(|t| self.embed(t)).collect()
    }

    fn dimension(&self) -> usize {
        self.spec().dimension
    }
}
