//! Content and network similarity between a query article and candidates.

mod store;

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use store::{EmbeddingStore, EmbeddingVector, BINARY_MAGIC, DEFAULT_DIM};

use crate::corpus::{Article, ArticleId};
use crate::graph::{CitationGraph, GraphError, NodeIx};
use crate::text::tokenize;

#[derive(Debug, Error)]
pub enum TextSimError {
    #[error("vector lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("embedding dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("embedding vector is empty")]
    EmptyVector,
    #[error("non-finite value at position {0}")]
    NonFinite(usize),
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed embedding store: {0}")]
    Format(String),
}

/// Cosine value plus a flag raised when either vector had zero norm
/// (the value is then defined as 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cosine {
    pub value: f64,
    pub zero_norm: bool,
}

pub fn cosine(u: &EmbeddingVector, v: &EmbeddingVector) -> Result<Cosine, TextSimError> {
    cosine_slices(u.values(), v.values())
}

pub(crate) fn cosine_slices(u: &[f32], v: &[f32]) -> Result<Cosine, TextSimError> {
    if u.len() != v.len() {
        return Err(TextSimError::LengthMismatch(u.len(), v.len()));
    }
    let (mut dot, mut nu, mut nv) = (0.0f64, 0.0f64, 0.0f64);
    for (&a, &b) in u.iter().zip(v) {
        let (a, b) = (f64::from(a), f64::from(b));
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return Ok(Cosine {
            value: 0.0,
            zero_norm: true,
        });
    }
    Ok(Cosine {
        value: (dot / (nu.sqrt() * nv.sqrt())).clamp(-1.0, 1.0),
        zero_norm: false,
    })
}

/// Abstract similarity of one candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbstractSim {
    pub id: ArticleId,
    pub value: f64,
    /// Set when the value is the call-local mean rather than a cosine.
    pub imputed: bool,
}

/// Cosine of abstract embeddings for every candidate.
///
/// A pair is computable when both articles have an abstract with a stored,
/// non-degenerate embedding. Every other candidate gets the arithmetic mean
/// of the computable values in this call, or 0 when there are none.
pub fn abstract_similarity(
    query: &Article,
    candidates: &[&Article],
    store: &EmbeddingStore,
) -> Vec<AbstractSim> {
    let qv = query
        .abstract_text
        .as_ref()
        .and_then(|_| store.get(&query.id));
    let computed: Vec<Option<f64>> = candidates
        .iter()
        .map(|c| {
            let qv = qv?;
            c.abstract_text.as_ref()?;
            let cv = store.get(&c.id)?;
            match cosine(qv, cv) {
                Ok(cos) if !cos.zero_norm => Some(cos.value),
                _ => None,
            }
        })
        .collect();
    let (sum, n) = computed
        .iter()
        .flatten()
        .fold((0.0f64, 0usize), |(s, n), &x| (s + x, n + 1));
    let mean = if n == 0 { 0.0 } else { sum / n as f64 };
    candidates
        .iter()
        .zip(computed)
        .map(|(c, v)| AbstractSim {
            id: c.id.clone(),
            value: v.unwrap_or(mean),
            imputed: v.is_none(),
        })
        .collect()
}

/// Bag-of-words term counts for a title. Never holds zero counts.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TitleTermVector(BTreeMap<String, u32>);

impl TitleTermVector {
    pub fn counts(&self) -> &BTreeMap<String, u32> {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn dot(&self, other: &Self) -> u64 {
        let (small, large) = if self.0.len() <= other.0.len() {
            (self, other)
        } else {
            (other, self)
        };
        small
            .0
            .iter()
            .filter_map(|(t, &a)| large.0.get(t).map(|&b| u64::from(a) * u64::from(b)))
            .sum()
    }

    pub fn squared_norm(&self) -> u64 {
        self.0.values().map(|&c| u64::from(c) * u64::from(c)).sum()
    }

    /// Cosine over the joint vocabulary, 0 when either side is empty.
    pub fn cosine(&self, other: &Self) -> f64 {
        if self.is_empty() || other.is_empty() {
            return 0.0;
        }
        let value =
            self.dot(other) as f64 / ((self.squared_norm() as f64).sqrt() * (other.squared_norm() as f64).sqrt());
        value.min(1.0)
    }
}

pub fn title_vector(title: &str) -> TitleTermVector {
    let mut counts = BTreeMap::new();
    for t in tokenize(title) {
        *counts.entry(t).or_insert(0) += 1;
    }
    TitleTermVector(counts)
}

pub fn title_similarity(a: &str, b: &str) -> f64 {
    title_vector(a).cosine(&title_vector(b))
}

/// `(x - min) / (max - min)`; all zeros when the range is degenerate.
pub fn max_min_normalize(values: &[f64]) -> Vec<f64> {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    if values.is_empty() || hi <= lo {
        return vec![0.0; values.len()];
    }
    values.iter().map(|&x| (x - lo) / (hi - lo)).collect()
}

/// Max-min scaled common-reference counts between the query and each candidate.
pub fn node_similarity_ix(g: &CitationGraph, query: NodeIx, candidates: &[NodeIx]) -> Vec<f64> {
    let counts: Vec<f64> = candidates
        .iter()
        .map(|&c| g.common_out(query, c) as f64)
        .collect();
    max_min_normalize(&counts)
}

pub fn node_similarity(
    g: &CitationGraph,
    query: &ArticleId,
    candidates: &[ArticleId],
) -> Result<Vec<(ArticleId, f64)>, GraphError> {
    let q = g.node(query)?;
    let ix = candidates
        .iter()
        .map(|c| g.node(c))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(candidates
        .iter()
        .cloned()
        .zip(node_similarity_ix(g, q, &ix))
        .collect())
}

/// The three per-candidate similarities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityTriple {
    pub abstract_sim: f64,
    pub title_sim: f64,
    pub node_sim: f64,
    pub abstract_imputed: bool,
}
