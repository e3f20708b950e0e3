//! Abstract embedding: providers, persistent cache and batched dispatch.
//!
//! The cache is consulted before any provider call and new vectors are
//! written to it before they are returned, so re-embedding an unchanged
//! corpus makes no provider calls at all.

mod cache;
mod provider;

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cache::{cache_key, CacheKey, EmbedCache, CACHE_FILE};
pub use provider::{offline_embed, EmbeddingProvider, HttpProvider, OfflineProvider, OFFLINE_MODEL_TAG};

use crate::corpus::Corpus;
use crate::text::collapse_whitespace;
use crate::textsim::{EmbeddingStore, EmbeddingVector, TextSimError};

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("network error: {0}")]
    Network(String),
    #[error("provider rejected text {index}: {message}")]
    Provider { index: usize, message: String },
    #[error("embedding dimension mismatch: store expects {expected}, provider returned {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid embed request: {0}")]
    InvalidRequest(String),
    #[error("embedding configuration: {0}")]
    Config(String),
    #[error("cache {path}: {source}")]
    Cache {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupt cache: {0}")]
    CacheCorrupt(String),
    #[error(transparent)]
    Store(#[from] TextSimError),
}

impl EmbedError {
    fn cache(path: &Path, source: std::io::Error) -> Self {
        Self::Cache {
            path: path.to_owned(),
            source,
        }
    }

    pub fn is_retryable(&self) -> bool {
        matches!(self, Self::Network(_))
    }
}

pub const DEFAULT_MODEL_TAG: &str = "text-embedding-3-small";
pub const DEFAULT_API_KEY_ENV: &str = "LITREC_EMBED_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedConfig {
    pub endpoint: Option<String>,
    pub model_tag: String,
    /// Name of the environment variable holding the bearer credential.
    pub api_key_env: String,
    pub dim: usize,
    pub batch_size: usize,
    pub max_in_flight: usize,
    /// Token-bucket pacing of provider calls; `None` disables pacing.
    pub requests_per_second: Option<f64>,
    pub retries: u32,
    pub backoff_ms: u64,
    pub timeout_secs: u64,
    pub cache_dir: Option<PathBuf>,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        Self {
            endpoint: None,
            model_tag: DEFAULT_MODEL_TAG.into(),
            api_key_env: DEFAULT_API_KEY_ENV.into(),
            dim: crate::textsim::DEFAULT_DIM,
            batch_size: 64,
            max_in_flight: 4,
            requests_per_second: None,
            retries: 3,
            backoff_ms: 500,
            timeout_secs: 30,
            cache_dir: None,
        }
    }
}

impl EmbedConfig {
    /// Build the remote provider described by this configuration.
    pub fn http_provider(&self) -> Result<HttpProvider, EmbedError> {
        let endpoint = self
            .endpoint
            .clone()
            .ok_or_else(|| EmbedError::Config("no embedding endpoint configured".into()))?;
        let key = std::env::var(&self.api_key_env).map_err(|_| {
            EmbedError::Config(format!("credential variable {} is not set", self.api_key_env))
        })?;
        HttpProvider::new(
            endpoint,
            self.model_tag.clone(),
            Some(key),
            self.dim,
            Duration::from_secs(self.timeout_secs),
        )
    }
}

/// A batch of non-empty texts for one model.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbedRequest {
    texts: Vec<String>,
    model_tag: String,
}

impl EmbedRequest {
    pub fn new(
        texts: Vec<String>,
        model_tag: impl Into<String>,
        max_batch: usize,
    ) -> Result<Self, EmbedError> {
        if texts.is_empty() || texts.len() > max_batch {
            return Err(EmbedError::InvalidRequest(format!(
                "batch size {} outside [1, {max_batch}]",
                texts.len()
            )));
        }
        if let Some(i) = texts.iter().position(|t| t.trim().is_empty()) {
            return Err(EmbedError::InvalidRequest(format!("text {i} is empty")));
        }
        Ok(Self {
            texts,
            model_tag: model_tag.into(),
        })
    }

    pub fn texts(&self) -> &[String] {
        &self.texts
    }

    pub fn model_tag(&self) -> &str {
        &self.model_tag
    }
}

/// Token bucket with capacity equal to one second of tokens.
#[derive(Debug)]
struct RateLimiter {
    rate: f64,
    capacity: f64,
    state: Mutex<(f64, Instant)>,
}

impl RateLimiter {
    fn new(rate: f64) -> Self {
        let capacity = rate.max(1.0);
        Self {
            rate,
            capacity,
            state: Mutex::new((capacity, Instant::now())),
        }
    }

    fn acquire(&self) {
        loop {
            let wait = {
                let mut s = self.state.lock().unwrap();
                let now = Instant::now();
                s.0 = (s.0 + now.duration_since(s.1).as_secs_f64() * self.rate).min(self.capacity);
                s.1 = now;
                if s.0 >= 1.0 {
                    s.0 -= 1.0;
                    return;
                }
                (1.0 - s.0) / self.rate
            };
            std::thread::sleep(Duration::from_secs_f64(wait));
        }
    }
}

/// Counters for provider traffic and cache effectiveness.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct EmbedStats {
    pub provider_calls: usize,
    pub texts_sent: usize,
    pub cache_hits: usize,
    pub retries: usize,
}

/// Cache-fronted, rate-limited dispatcher over an [`EmbeddingProvider`].
pub struct Embedder {
    provider: Arc<dyn EmbeddingProvider>,
    cache: Option<EmbedCache>,
    config: EmbedConfig,
    limiter: Option<RateLimiter>,
    provider_calls: AtomicUsize,
    texts_sent: AtomicUsize,
    cache_hits: AtomicUsize,
    retries: AtomicUsize,
}

impl Embedder {
    pub fn new(
        provider: Arc<dyn EmbeddingProvider>,
        cache: Option<EmbedCache>,
        config: EmbedConfig,
    ) -> Result<Self, EmbedError> {
        if config.batch_size == 0 || config.max_in_flight == 0 {
            return Err(EmbedError::Config(
                "batch_size and max_in_flight must be positive".into(),
            ));
        }
        if provider.dim() != config.dim {
            return Err(EmbedError::DimensionMismatch {
                expected: config.dim,
                found: provider.dim(),
            });
        }
        let limiter = match config.requests_per_second {
            Some(r) if r > 0.0 => Some(RateLimiter::new(r)),
            Some(r) => {
                return Err(EmbedError::Config(format!(
                    "requests_per_second must be positive, got {r}"
                )))
            }
            None => None,
        };
        Ok(Self {
            provider,
            cache,
            config,
            limiter,
            provider_calls: AtomicUsize::new(0),
            texts_sent: AtomicUsize::new(0),
            cache_hits: AtomicUsize::new(0),
            retries: AtomicUsize::new(0),
        })
    }

    pub fn model_tag(&self) -> &str {
        self.provider.model_tag()
    }

    pub fn dim(&self) -> usize {
        self.config.dim
    }

    pub fn stats(&self) -> EmbedStats {
        EmbedStats {
            provider_calls: self.provider_calls.load(Ordering::SeqCst),
            texts_sent: self.texts_sent.load(Ordering::SeqCst),
            cache_hits: self.cache_hits.load(Ordering::SeqCst),
            retries: self.retries.load(Ordering::SeqCst),
        }
    }

    pub fn request(&self, texts: Vec<String>) -> Result<EmbedRequest, EmbedError> {
        EmbedRequest::new(texts, self.model_tag(), self.config.batch_size)
    }

    /// Embed one request: cache lookups first, then at most one provider
    /// call (plus retries) for the distinct misses.
    pub fn embed_batch(&self, req: &EmbedRequest) -> Result<Vec<EmbeddingVector>, EmbedError> {
        if req.model_tag() != self.model_tag() {
            return Err(EmbedError::InvalidRequest(format!(
                "request model {:?} does not match provider model {:?}",
                req.model_tag(),
                self.model_tag()
            )));
        }
        let keys: Vec<CacheKey> = req
            .texts()
            .iter()
            .map(|t| cache_key(req.model_tag(), t))
            .collect();
        let mut found: HashMap<CacheKey, EmbeddingVector> = HashMap::new();
        let mut misses: Vec<(CacheKey, String, usize)> = Vec::new();
        for (i, (key, text)) in keys.iter().zip(req.texts()).enumerate() {
            if found.contains_key(key) || misses.iter().any(|(k, _, _)| k == key) {
                continue;
            }
            match self.cache.as_ref().and_then(|c| c.get(key)) {
                Some(v) => {
                    self.cache_hits.fetch_add(1, Ordering::SeqCst);
                    found.insert(*key, v);
                }
                None => misses.push((*key, collapse_whitespace(text), i)),
            }
        }

        if !misses.is_empty() {
            let texts: Vec<String> = misses.iter().map(|(_, t, _)| t.clone()).collect();
            let vectors = self.call_with_retries(&texts).map_err(|e| match e {
                EmbedError::Provider { index, message } => EmbedError::Provider {
                    index: misses.get(index).map_or(index, |m| m.2),
                    message,
                },
                other => other,
            })?;
            if vectors.len() != texts.len() {
                return Err(EmbedError::Provider {
                    index: 0,
                    message: format!("expected {} vectors, got {}", texts.len(), vectors.len()),
                });
            }
            if let Some(v) = vectors.iter().find(|v| v.len() != self.config.dim) {
                return Err(EmbedError::DimensionMismatch {
                    expected: self.config.dim,
                    found: v.len(),
                });
            }
            let fresh: Vec<(CacheKey, EmbeddingVector)> = misses
                .iter()
                .map(|m| m.0)
                .zip(vectors)
                .collect();
            if let Some(cache) = &self.cache {
                cache.insert_many(&fresh)?;
            }
            found.extend(fresh);
        }

        Ok(keys.iter().map(|k| found[k].clone()).collect())
    }

    fn call_with_retries(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        let mut attempt = 0u32;
        loop {
            if let Some(l) = &self.limiter {
                l.acquire();
            }
            self.provider_calls.fetch_add(1, Ordering::SeqCst);
            self.texts_sent.fetch_add(texts.len(), Ordering::SeqCst);
            match self.provider.embed(texts) {
                Err(e) if e.is_retryable() && attempt < self.config.retries => {
                    let delay = self.config.backoff_ms.saturating_mul(1 << attempt.min(16));
                    tracing::warn!(attempt, delay_ms = delay, error = %e, "retrying embedding call");
                    self.retries.fetch_add(1, Ordering::SeqCst);
                    std::thread::sleep(Duration::from_millis(delay));
                    attempt += 1;
                }
                other => return other,
            }
        }
    }

    /// Embed any number of texts, split into configured batches that run
    /// with at most `max_in_flight` concurrent provider calls.
    pub fn embed_texts(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        let requests = texts
            .chunks(self.config.batch_size)
            .map(|c| self.request(c.to_vec()))
            .collect::<Result<Vec<_>, _>>()?;
        let results: Vec<Mutex<Option<Result<Vec<EmbeddingVector>, EmbedError>>>> =
            requests.iter().map(|_| Mutex::new(None)).collect();
        let next = AtomicUsize::new(0);
        let workers = self.config.max_in_flight.min(requests.len());
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    if i >= requests.len() {
                        break;
                    }
                    let r = self.embed_batch(&requests[i]);
                    let failed = r.is_err();
                    *results[i].lock().unwrap() = Some(r);
                    if failed {
                        next.store(requests.len(), Ordering::SeqCst);
                    }
                });
            }
        });
        let mut out = Vec::with_capacity(texts.len());
        for (i, slot) in results.into_iter().enumerate() {
            match slot.into_inner().unwrap() {
                Some(Ok(v)) => out.extend(v),
                Some(Err(EmbedError::Provider { index, message })) => {
                    return Err(EmbedError::Provider {
                        index: i * self.config.batch_size + index,
                        message,
                    })
                }
                Some(Err(e)) => return Err(e),
                None => {}
            }
        }
        Ok(out)
    }

    /// Embed every abstract in the corpus into a store.
    pub fn embed_corpus(&self, corpus: &Corpus) -> Result<EmbeddingStore, EmbedError> {
        let with_abstract: Vec<_> = corpus
            .articles()
            .iter()
            .filter_map(|a| a.abstract_text.as_ref().map(|t| (a.id.clone(), t.clone())))
            .collect();
        let texts: Vec<String> = with_abstract.iter().map(|(_, t)| t.clone()).collect();
        let vectors = self.embed_texts(&texts)?;
        let mut store = EmbeddingStore::new(self.model_tag(), self.config.dim);
        for ((id, _), v) in with_abstract.into_iter().zip(vectors) {
            store.insert(id, v)?;
        }
        Ok(store)
    }
}
