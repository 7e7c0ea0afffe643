use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{Embedder, EmbedderSpec, Embedding};
use crate::error::{Error, Result};

#[derive(Serialize)]
struct EmbedRequest<'a> {
    text: &'a str,
}

#[derive(Deserialize)]
struct EmbedResponse {
    vector: Vec<f64>,
}

/// Adapter for an external embedding server.
///
/// Wire format: `POST {url}` with body `{"text": "..."}`, answered by
/// `{"vector": [f64, ...]}`. Vectors are re-normalized on arrival. The
/// dimension is discovered once at construction by embedding a probe text.
///
/// Calls block; inside an async runtime run them on a blocking thread.
pub struct HttpEmbedder {
    url: String,
    agent: ureq::Agent,
    spec: EmbedderSpec,
}

impl HttpEmbedder {
    pub fn connect(name: impl Into<String>, url: impl Into<String>, timeout: Duration) -> Result<Self> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        let mut embedder = HttpEmbedder {
            url: url.into(),
            agent,
            spec: EmbedderSpec {
                name: name.into(),
                dimension: 0,
            },
        };
        let probe = embedder.request("dimension probe")?;
        embedder.spec.dimension = probe.len();
        if embedder.spec.dimension == 0 {
            return Err(Error::ProviderUnavailable("provider returned an empty vector".into()));
        }
        Ok(embedder)
    }

    fn request(&self, text: &str) -> Result<Vec<f64>> {
        let mut resp = self
            .agent
            .post(&self.url)
            .send_json(EmbedRequest { text })
            .map_err(|e| Error::ProviderUnavailable(e.to_string()))?;
        let body: EmbedResponse = resp
            .body_mut()
            .read_json()
            .map_err(|e| Error::ProviderUnavailable(format!("bad response body: {e}")))?;
        Ok(body.vector)
    }
}

impl Embedder for HttpEmbedder {
    fn spec(&self) -> &EmbedderSpec {
        &self.spec
    }

    fn embed(&self, text: &str) -> Result<Embedding> {
        if text.trim().is_empty() {
            return Err(Error::EmptyText);
        }
        let raw = self.request(text)?;
        if raw.len() != self.spec.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.spec.dimension,
                actual: raw.len(),
            });
        }
        Embedding::from_raw(raw).map_err(|e| Error::ProviderUnavailable(e.to_string()))
    }
}
