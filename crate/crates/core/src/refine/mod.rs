//! Long-context refinement: split articles into fixed-size paragraphs, score
//! them against the question, keep the top k.

use std::collections::HashMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

mod remote;
mod search;

pub use remote::{RemoteScorer, ENDPOINT_ENV};
pub use search::{load_articles, ArticleRef, ManifestSearch, SearchProvider};

pub const PARAGRAPH_WORDS: usize = 100;

#[derive(Debug, Error)]
pub enum RefineError {
    #[error("k must be at least 1")]
    ZeroK,
    #[error("scorer failed on {at}: {message}")]
    Scorer { at: String, message: String },
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("no articles listed for {0}")]
    UnknownQuestion(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Failure inside a scorer. `index` is the position in the embedded batch
/// (0 is the question, paragraph `i` is `i + 1`) when known.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScorerError {
    pub index: Option<usize>,
    pub message: String,
}

impl ScorerError {
    pub fn new(index: Option<usize>, message: impl Into<String>) -> Self {
        Self {
            index,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ParagraphId {
    pub source: String,
    pub ordinal: usize,
}

impl fmt::Display for ParagraphId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.source, self.ordinal)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Paragraph {
    pub id: ParagraphId,
    pub text: String,
    pub word_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredParagraph {
    pub paragraph: Paragraph,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefinementConfig {
    pub k: usize,
}

impl RefinementConfig {
    pub fn new(k: usize) -> Result<Self, RefineError> {
        if k == 0 {
            return Err(RefineError::ZeroK);
        }
        Ok(Self { k })
    }
}

impl Default for RefinementConfig {
    fn default() -> Self {
        Self { k: 100 }
    }
}

/// Greedy chunks of at most [`PARAGRAPH_WORDS`] whitespace tokens.
pub fn split_paragraphs(article: &str, source: &str) -> Vec<Paragraph> {
    let tokens: Vec<&str> = article.split_whitespace().collect();
    tokens
        .chunks(PARAGRAPH_WORDS)
        .enumerate()
        .map(|(ordinal, chunk)| Paragraph {
            id: ParagraphId {
                source: source.to_string(),
                ordinal,
            },
            text: chunk.join(" "),
            word_count: chunk.len(),
        })
        .collect()
}

/// Lowercased whitespace tokens with surrounding punctuation stripped.
pub fn lexical_tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split_whitespace()
        .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase())
        .filter(|t| !t.is_empty())
}

#[derive(Debug, Clone, PartialEq)]
pub enum Embedding {
    Dense(Vec<f64>),
    /// `(dimension, value)` pairs sorted by dimension.
    Sparse(Vec<(usize, f64)>),
}

impl Embedding {
    fn norm(&self) -> f64 {
        match self {
            Embedding::Dense(v) => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            Embedding::Sparse(v) => v.iter().map(|(_, x)| x * x).sum::<f64>().sqrt(),
        }
    }

    fn dot(&self, other: &Embedding) -> f64 {
        match (self, other) {
            (Embedding::Dense(a), Embedding::Dense(b)) => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            (Embedding::Sparse(a), Embedding::Sparse(b)) => {
                let (mut i, mut j, mut s) = (0, 0, 0.0);
                while i < a.len() && j < b.len() {
                    match a[i].0.cmp(&b[j].0) {
                        std::cmp::Ordering::Less => i += 1,
                        std::cmp::Ordering::Greater => j += 1,
                        std::cmp::Ordering::Equal => {
                            s += a[i].1 * b[j].1;
                            i += 1;
                            j += 1;
                        }
                    }
                }
                s
            }
            (Embedding::Sparse(s), Embedding::Dense(d)) | (Embedding::Dense(d), Embedding::Sparse(s)) => {
                s.iter().map(|(k, x)| x * d.get(*k).copied().unwrap_or(0.0)).sum()
            }
        }
    }
}

/// Cosine similarity, clamped to [-1, 1]; 0 when either vector is zero.
pub fn cosine(a: &Embedding, b: &Embedding) -> f64 {
    let n = a.norm() * b.norm();
    if n == 0.0 {
        0.0
    } else {
        (a.dot(b) / n).clamp(-1.0, 1.0)
    }
}

pub trait RelevanceScorer: Send + Sync {
    /// Embeds the question and every paragraph. Corpus-dependent scorers may
    /// fit their statistics on `paragraphs`.
    fn embed(&self, question: &str, paragraphs: &[&str]) -> Result<(Embedding, Vec<Embedding>), ScorerError>;
}

/// TF-IDF term vectors with smoothed idf `ln((1 + N) / (1 + df)) + 1`,
/// fitted on the paragraphs being ranked.
#[derive(Debug, Clone, Copy, Default)]
pub struct TfIdfScorer;

impl RelevanceScorer for TfIdfScorer {
    fn embed(&self, question: &str, paragraphs: &[&str]) -> Result<(Embedding, Vec<Embedding>), ScorerError> {
        let mut vocab: HashMap<String, usize> = HashMap::new();
        let term_counts = |text: &str, vocab: &mut HashMap<String, usize>| {
            let mut counts: HashMap<usize, f64> = HashMap::new();
            for t in lexical_tokens(text) {
                let next = vocab.len();
                let id = *vocab.entry(t).or_insert(next);
                *counts.entry(id).or_default() += 1.0;
            }
            let mut v: Vec<(usize, f64)> = counts.into_iter().collect();
            v.sort_unstable_by_key(|(k, _)| *k);
            v
        };
        let docs: Vec<Vec<(usize, f64)>> = paragraphs.iter().map(|p| term_counts(p, &mut vocab)).collect();
        let query = term_counts(question, &mut vocab);
        let mut df = vec![0usize; vocab.len()];
        for d in &docs {
            for (k, _) in d {
                df[*k] += 1;
            }
        }
        let n = docs.len() as f64;
        let idf: Vec<f64> = df.iter().map(|&d| ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0).collect();
        let weigh = |v: Vec<(usize, f64)>| Embedding::Sparse(v.into_iter().map(|(k, tf)| (k, tf * idf[k])).collect());
        Ok((weigh(query), docs.into_iter().map(weigh).collect()))
    }
}

/// Cosine score of every paragraph against the question, in input order.
pub fn score_paragraphs(
    question: &str,
    paragraphs: &[Paragraph],
    scorer: &dyn RelevanceScorer,
) -> Result<Vec<ScoredParagraph>, RefineError> {
    let texts: Vec<&str> = paragraphs.iter().map(|p| p.text.as_str()).collect();
    let (q, vectors) = scorer.embed(question, &texts).map_err(|e| RefineError::Scorer {
        at: match e.index {
            Some(0) => "question".to_string(),
            Some(i) => paragraphs.get(i - 1).map_or_else(|| format!("item {i}"), |p| p.id.to_string()),
            None => "batch".to_string(),
        },
        message: e.message,
    })?;
    if vectors.len() != paragraphs.len() {
        return Err(RefineError::Scorer {
            at: "batch".into(),
            message: format!("{} vectors for {} paragraphs", vectors.len(), paragraphs.len()),
        });
    }
    Ok(paragraphs
        .par_iter()
        .zip(vectors.par_iter())
        .map(|(p, v)| ScoredParagraph {
            paragraph: p.clone(),
            score: cosine(&q, v),
        })
        .collect())
}

/// Splits every `(source id, text)` article, scores, and keeps the `cfg.k`
/// best paragraphs by descending score, ties by `(source, ordinal)`.
pub fn refine_context(
    question: &str,
    articles: &[(String, String)],
    cfg: RefinementConfig,
    scorer: &dyn RelevanceScorer,
) -> Result<Vec<ScoredParagraph>, RefineError> {
    if cfg.k == 0 {
        return Err(RefineError::ZeroK);
    }
    let mut paragraphs: Vec<Paragraph> = articles
        .par_iter()
        .flat_map_iter(|(source, text)| split_paragraphs(text, source))
        .collect();
    // scoring order does not depend on how articles were listed
    paragraphs.sort_by(|a, b| a.id.cmp(&b.id));
    let mut scored = score_paragraphs(question, &paragraphs, scorer)?;
    scored.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.paragraph.id.cmp(&b.paragraph.id)));
    scored.truncate(cfg.k);
    Ok(scored)
}
