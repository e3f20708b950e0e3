//! Thin async client for the litrec service.

use std::time::Duration;

use litrec_core::api::{
    ArticleResponse, ErrorBody, HealthResponse, RecommendRequest, RecommendResponse, SearchQuery,
    SearchResponse, StatsResponse,
};
use litrec_core::corpus::ArticleId;
use litrec_core::SearchMode;
use reqwest::{RequestBuilder, StatusCode};
use serde::de::DeserializeOwned;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("invalid base url {0:?}")]
    BaseUrl(String),
    #[error("request failed: {0}")]
    Transport(#[from] reqwest::Error),
    #[error("server returned {status}: {message}")]
    Api { status: StatusCode, message: String },
}

impl ClientError {
    pub fn status(&self) -> Option<StatusCode> {
        match self {
            Self::Api { status, .. } => Some(*status),
            Self::Transport(e) => e.status(),
            Self::BaseUrl(_) => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Client {
    base: String,
    http: reqwest::Client,
}

impl Client {
    pub fn new(base_url: &str) -> Result<Self, ClientError> {
        Self::with_timeout(base_url, Duration::from_secs(30))
    }

    pub fn with_timeout(base_url: &str, timeout: Duration) -> Result<Self, ClientError> {
        let base = base_url.trim_end_matches('/');
        if !(base.starts_with("http://") || base.starts_with("https://")) {
            return Err(ClientError::BaseUrl(base_url.to_owned()));
        }
        Ok(Self {
            base: base.to_owned(),
            http: reqwest::Client::builder().timeout(timeout).build()?,
        })
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    async fn send<T: DeserializeOwned>(req: RequestBuilder) -> Result<T, ClientError> {
        let resp = req.send().await?;
        let status = resp.status();
        if status.is_success() {
            return Ok(resp.json().await?);
        }
        let bytes = resp.bytes().await?;
        let message = serde_json::from_slice::<ErrorBody>(&bytes)
            .map(|b| b.error)
            .unwrap_or_else(|_| String::from_utf8_lossy(&bytes).into_owned());
        Err(ClientError::Api { status, message })
    }

    pub async fn health(&self) -> Result<HealthResponse, ClientError> {
        Self::send(self.http.get(self.url("/v1/healthz"))).await
    }

    pub async fn search(
        &self,
        q: &str,
        mode: SearchMode,
        m: usize,
    ) -> Result<SearchResponse, ClientError> {
        let query = SearchQuery {
            q: q.to_owned(),
            mode,
            m,
        };
        Self::send(self.http.get(self.url("/v1/search")).query(&query)).await
    }

    pub async fn article(&self, id: &ArticleId) -> Result<ArticleResponse, ClientError> {
        let path = format!("/v1/article/{}", encode_segment(id.as_str()));
        Self::send(self.http.get(self.url(&path))).await
    }

    pub async fn recommend(&self, req: &RecommendRequest) -> Result<RecommendResponse, ClientError> {
        Self::send(self.http.post(self.url("/v1/recommend")).json(req)).await
    }

    pub async fn stats(&self) -> Result<StatsResponse, ClientError> {
        Self::send(self.http.get(self.url("/v1/stats"))).await
    }
}

/// Percent-encode everything outside the unreserved set.
fn encode_segment(s: &str) -> String {
    s.bytes()
        .map(|b| match b {
            b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9' | b'-' | b'.' | b'_' | b'~' => {
                (b as char).to_string()
            }
            _ => format!("%{b:02X}"),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_http_base() {
        assert!(matches!(Client::new("localhost:8080"), Err(ClientError::BaseUrl(_))));
        assert_eq!(Client::new("http://h:1/").unwrap().url("/v1/stats"), "http://h:1/v1/stats");
    }

    #[test]
    fn encodes_path_segments() {
        assert_eq!(encode_segment("10.1214/aos/1176"), "10.1214%2Faos%2F1176");
        assert_eq!(encode_segment("a b"), "a%20b");
    }
}
