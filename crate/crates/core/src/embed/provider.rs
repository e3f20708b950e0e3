use std::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::EmbedError;
use crate::text::collapse_whitespace;
use crate::textsim::EmbeddingVector;

/// Something that turns a batch of texts into same-order vectors.
pub trait EmbeddingProvider: Send + Sync {
    fn model_tag(&self) -> &str;
    fn dim(&self) -> usize;
    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError>;
}

pub const OFFLINE_MODEL_TAG: &str = "offline-sha256-chacha8";

/// Deterministic pseudo-random unit vector seeded by the normalized text.
///
/// Not a semantic model: distinct texts map to nearly orthogonal vectors.
pub fn offline_embed(text: &str, dim: usize) -> EmbeddingVector {
    assert!(dim >= 2, "offline embedding needs dim >= 2");
    let seed: [u8; 32] = Sha256::digest(collapse_whitespace(text).as_bytes()).into();
    let mut rng = ChaCha8Rng::from_seed(seed);
    let raw: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
    let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
    EmbeddingVector::new(raw.iter().map(|x| (x / norm) as f32).collect())
        .expect("normal samples are finite")
}

#[derive(Debug, Clone)]
pub struct OfflineProvider {
    dim: usize,
}

impl OfflineProvider {
    pub fn new(dim: usize) -> Self {
        assert!(dim >= 2, "offline embedding needs dim >= 2");
        Self { dim }
    }
}

impl EmbeddingProvider for OfflineProvider {
    fn model_tag(&self) -> &str {
        OFFLINE_MODEL_TAG
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        Ok(texts.iter().map(|t| offline_embed(t, self.dim)).collect())
    }
}

#[derive(Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    input: &'a [String],
}

#[derive(Deserialize)]
struct WireItem {
    index: usize,
    embedding: Vec<f32>,
}

#[derive(Deserialize)]
struct WireResponse {
    data: Vec<WireItem>,
}

#[derive(Deserialize)]
struct WireErrorBody {
    error: WireError,
}

#[derive(Deserialize)]
struct WireError {
    message: String,
    #[serde(default)]
    index: Option<usize>,
}

/// Remote embeddings endpoint speaking the common `{model, input}` →
/// `{data: [{index, embedding}]}` shape with bearer authentication.
#[derive(Debug, Clone)]
pub struct HttpProvider {
    endpoint: String,
    model_tag: String,
    api_key: Option<String>,
    dim: usize,
    client: reqwest::blocking::Client,
}

impl HttpProvider {
    pub fn new(
        endpoint: impl Into<String>,
        model_tag: impl Into<String>,
        api_key: Option<String>,
        dim: usize,
        timeout: Duration,
    ) -> Result<Self, EmbedError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| EmbedError::Config(e.to_string()))?;
        Ok(Self {
            endpoint: endpoint.into(),
            model_tag: model_tag.into(),
            api_key,
            dim,
            client,
        })
    }
}

impl EmbeddingProvider for HttpProvider {
    fn model_tag(&self) -> &str {
        &self.model_tag
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        let mut req = self.client.post(&self.endpoint).json(&WireRequest {
            model: &self.model_tag,
            input: texts,
        });
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req
            .send()
            .map_err(|e| EmbedError::Network(e.to_string()))?;
        let status = resp.status();
        if status.as_u16() == 429 || status.is_server_error() {
            return Err(EmbedError::Network(format!("provider returned {status}")));
        }
        let body = resp
            .bytes()
            .map_err(|e| EmbedError::Network(e.to_string()))?;
        if !status.is_success() {
            let (index, message) = match serde_json::from_slice::<WireErrorBody>(&body) {
                Ok(b) => (b.error.index.unwrap_or(0), b.error.message),
                Err(_) => (0, String::from_utf8_lossy(&body).into_owned()),
            };
            return Err(EmbedError::Provider {
                index,
                message: format!("{status}: {message}"),
            });
        }
        let parsed: WireResponse = serde_json::from_slice(&body).map_err(|e| EmbedError::Provider {
            index: 0,
            message: format!("unparseable response: {e}"),
        })?;
        let mut slots: Vec<Option<EmbeddingVector>> = vec![None; texts.len()];
        for item in parsed.data {
            let slot = slots.get_mut(item.index).ok_or_else(|| EmbedError::Provider {
                index: item.index,
                message: "response index out of range".into(),
            })?;
            let v = EmbeddingVector::new(item.embedding).map_err(|e| EmbedError::Provider {
                index: item.index,
                message: e.to_string(),
            })?;
            *slot = Some(v);
        }
        slots
            .into_iter()
            .enumerate()
            .map(|(i, v)| {
                v.ok_or_else(|| EmbedError::Provider {
                    index: i,
                    message: "missing embedding in response".into(),
                })
            })
            .collect()
    }
}
