//! JSON wire types for the HTTP service.

use serde::{Deserialize, Serialize};

use crate::config::WeightSpec;
use crate::corpus::{Article, ArticleId};
use crate::engine::{SearchHit, SearchMode};
use crate::graph::GraphStats;
use crate::recommend::{ListSelection, RecommendationResult};

pub const DEFAULT_SEARCH_LIMIT: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchQuery {
    pub q: String,
    #[serde(default)]
    pub mode: SearchMode,
    /// Number of matches to return.
    #[serde(default = "default_limit", alias = "limit")]
    pub m: usize,
}

fn default_limit() -> usize {
    DEFAULT_SEARCH_LIMIT
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResponse {
    pub query: String,
    pub mode: SearchMode,
    pub hits: Vec<SearchHit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendRequest {
    pub id: ArticleId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<WeightSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period_len: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lists: Option<ListSelection>,
}

impl RecommendRequest {
    pub fn new(id: ArticleId) -> Self {
        Self {
            id,
            weights: None,
            k: None,
            period_len: None,
            lists: None,
        }
    }
}

pub type RecommendResponse = RecommendationResult;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArticleResponse {
    pub article: Article,
    pub in_degree: usize,
    pub out_degree: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsResponse {
    pub graph: GraphStats,
    pub year_range: Option<(i32, i32)>,
    pub embeddings: usize,
    pub embedding_model: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HealthResponse {
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}
