//! Embedding service client: POST `{"texts": [...]}`, receive `{"vectors": [[...]]}`.

use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::refine::{Embedding, RelevanceScorer, ScorerError};

/// Environment variable that overrides the configured endpoint.
pub const ENDPOINT_ENV: &str = "TEMPQA_SCORER_ENDPOINT";

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [&'a str],
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct RemoteScorer {
    endpoint: String,
    batch_size: usize,
    agent: ureq::Agent,
}

impl RemoteScorer {
    pub const BATCH_SIZE: usize = 64;

    pub fn new(endpoint: impl Into<String>) -> Self {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(60)))
            .build();
        Self {
            endpoint: endpoint.into(),
            batch_size: Self::BATCH_SIZE,
            agent: ureq::Agent::new_with_config(config),
        }
    }

    /// The endpoint from [`ENDPOINT_ENV`] if set, else `fallback`.
    pub fn from_env_or(fallback: Option<&str>) -> Option<Self> {
        std::env::var(ENDPOINT_ENV)
            .ok()
            .filter(|s| !s.is_empty())
            .or_else(|| fallback.map(str::to_string))
            .map(Self::new)
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn embed_batch(&self, texts: &[&str], offset: usize) -> Result<Vec<Vec<f64>>, ScorerError> {
        let fail = |m: String| ScorerError::new(Some(offset), m);
        let mut resp = self
            .agent
            .post(&self.endpoint)
            .send_json(EmbedRequest { texts })
            .map_err(|e| fail(format!("request to {} failed: {e}", self.endpoint)))?;
        let body: EmbedResponse = resp
            .body_mut()
            .read_json()
            .map_err(|e| fail(format!("bad response body: {e}")))?;
        if body.vectors.len() != texts.len() {
            return Err(fail(format!("{} vectors returned for {} texts", body.vectors.len(), texts.len())));
        }
        Ok(body.vectors)
    }

    pub fn embed_texts(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, ScorerError> {
        let batches: Vec<Vec<Vec<f64>>> = texts
            .par_chunks(self.batch_size)
            .enumerate()
            .map(|(i, chunk)| self.embed_batch(chunk, i * self.batch_size))
            .collect::<Result<_, _>>()?;
        let vectors: Vec<Vec<f64>> = batches.into_iter().flatten().collect();
        if let Some(first) = vectors.first() {
            if let Some(i) = vectors.iter().position(|v| v.len() != first.len()) {
                return Err(ScorerError::new(Some(i), "vector dimension differs from the rest of the batch"));
            }
        }
        Ok(vectors)
    }
}

impl RelevanceScorer for RemoteScorer {
    fn embed(&self, question: &str, paragraphs: &[&str]) -> Result<(Embedding, Vec<Embedding>), ScorerError> {
        let mut texts = Vec::with_capacity(paragraphs.len() + 1);
        texts.push(question);
        texts.extend_from_slice(paragraphs);
        let mut vectors = self.embed_texts(&texts)?.into_iter().map(Embedding::Dense);
        let q = vectors.next().ok_or_else(|| ScorerError::new(None, "empty response"))?;
        Ok((q, vectors.collect()))
    }
}
