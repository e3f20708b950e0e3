//! Candidate construction, weighted scoring and ranked recommendation.
//!
//! For a matched article two candidate lists are built: the REFERENCE list
//! (everything within three out-neighbor hops) and the CITATION list (direct
//! citers). Each list is scored independently: abstract, title and node
//! similarity are combined under the list's (w1, w2, w3), ranked overall and
//! per publication period, and then blended with max-min normalized citation
//! counts under (w4, w5) to pick fundamental articles.

mod matching;
mod weights;

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use matching::{fuzzy_score, match_keyword, match_title, MatchHit, DEFAULT_TITLE_THRESHOLD};
pub use weights::{ListKind, ListWeights, WeightConfig, WeightError, PRESETS, SIMPLEX_TOLERANCE};

use crate::corpus::{Article, ArticleId, Corpus};
use crate::graph::{CitationGraph, GraphError, NodeIx};
use crate::textsim::{
    abstract_similarity, max_min_normalize, node_similarity_ix, title_vector, EmbeddingStore,
    SimilarityTriple,
};

/// Out-neighbor hops that define the REFERENCE list.
pub const REFERENCE_HOPS: usize = 3;
pub const DEFAULT_K: usize = 10;
pub const DEFAULT_PERIOD_LEN: u32 = 5;

#[derive(Debug, Error, PartialEq)]
pub enum RecommendError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("candidate list is empty")]
    EmptyCandidates,
    #[error("{0} must be positive")]
    NonPositive(&'static str),
}

/// Candidate articles for one matched article.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateSets {
    pub reference_list: Vec<NodeIx>,
    pub citation_list: Vec<NodeIx>,
}

/// REFERENCE list = 3-hop out closure, CITATION list = direct citers.
/// A node reachable both ways (only possible with cycles) stays in the
/// reference list.
pub fn candidate_sets(g: &CitationGraph, matched: NodeIx) -> CandidateSets {
    let reference_list = g.k_hop_out(matched, REFERENCE_HOPS);
    let citation_list = g
        .in_row(matched)
        .iter()
        .copied()
        .filter(|v| *v != matched && reference_list.binary_search(v).is_err())
        .collect();
    CandidateSets {
        reference_list,
        citation_list,
    }
}

/// `w1 * abstract + w2 * title + w3 * node`.
pub fn weighted_similarity(sims: &SimilarityTriple, w: &[f64; 3]) -> f64 {
    w[0] * sims.abstract_sim + w[1] * sims.title_sim + w[2] * sims.node_sim
}

/// `w4 * normalized citations + w5 * weighted-sim`, with citation counts
/// max-min normalized over the list.
pub fn fundamental_scores(
    weighted_sims: &[f64],
    citation_counts: &[u64],
    w: &[f64; 2],
) -> Result<Vec<f64>, RecommendError> {
    if weighted_sims.is_empty() {
        return Err(RecommendError::EmptyCandidates);
    }
    assert_eq!(weighted_sims.len(), citation_counts.len());
    let counts: Vec<f64> = citation_counts.iter().map(|&c| c as f64).collect();
    Ok(max_min_normalize(&counts)
        .into_iter()
        .zip(weighted_sims)
        .map(|(c, &s)| w[0] * c + w[1] * s)
        .collect())
}

/// One scored candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredArticle {
    pub id: ArticleId,
    pub title: String,
    pub year: i32,
    pub citation_count: u64,
    pub sims: SimilarityTriple,
    pub weighted_sim: f64,
    pub fundamental_score: Option<f64>,
}

/// Score descending, then year descending, then id ascending.
pub fn rank_order(a_score: f64, a: &ScoredArticle, b_score: f64, b: &ScoredArticle) -> Ordering {
    b_score
        .total_cmp(&a_score)
        .then_with(|| b.year.cmp(&a.year))
        .then_with(|| a.id.cmp(&b.id))
}

fn citation_count(g: &CitationGraph, node: NodeIx, a: &Article) -> u64 {
    a.citation_count.unwrap_or(g.in_degree(node) as u64)
}

/// Steps 1 and 2 plus the fundamental score, for every candidate, sorted
/// by weighted similarity.
pub fn score_candidates(
    corpus: &Corpus,
    g: &CitationGraph,
    store: &EmbeddingStore,
    matched: NodeIx,
    candidates: &[NodeIx],
    w: &ListWeights,
) -> Vec<ScoredArticle> {
    if candidates.is_empty() {
        return Vec::new();
    }
    let arts = corpus.articles();
    let query = &arts[matched as usize];
    let cand_arts: Vec<&Article> = candidates.iter().map(|&c| &arts[c as usize]).collect();

    let abstract_sims = abstract_similarity(query, &cand_arts, store);
    let query_title = title_vector(&query.title);
    let title_sims: Vec<f64> = cand_arts
        .par_iter()
        .map(|a| query_title.cosine(&title_vector(&a.title)))
        .collect();
    let node_sims = node_similarity_ix(g, matched, candidates);

    let mut scored: Vec<ScoredArticle> = candidates
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let a = cand_arts[i];
            let sims = SimilarityTriple {
                abstract_sim: abstract_sims[i].value,
                title_sim: title_sims[i],
                node_sim: node_sims[i],
                abstract_imputed: abstract_sims[i].imputed,
            };
            ScoredArticle {
                id: a.id.clone(),
                title: a.title.clone(),
                year: a.year,
                citation_count: citation_count(g, c, a),
                weighted_sim: weighted_similarity(&sims, &w.similarity),
                sims,
                fundamental_score: None,
            }
        })
        .collect();

    let wsims: Vec<f64> = scored.iter().map(|s| s.weighted_sim).collect();
    let counts: Vec<u64> = scored.iter().map(|s| s.citation_count).collect();
    let fundamental =
        fundamental_scores(&wsims, &counts, &w.fundamental).expect("non-empty candidates");
    for (s, f) in scored.iter_mut().zip(fundamental) {
        s.fundamental_score = Some(f);
    }
    scored.sort_by(|a, b| rank_order(a.weighted_sim, a, b.weighted_sim, b));
    scored
}

/// Which candidate lists to compute.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ListSelection {
    Reference,
    Citation,
    #[default]
    Both,
}

impl ListSelection {
    pub fn includes(self, list: ListKind) -> bool {
        matches!(
            (self, list),
            (Self::Both, _)
                | (Self::Reference, ListKind::Reference)
                | (Self::Citation, ListKind::Citation)
        )
    }
}

impl std::str::FromStr for ListSelection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "reference" => Ok(Self::Reference),
            "citation" => Ok(Self::Citation),
            "both" => Ok(Self::Both),
            _ => Err(format!("unknown list selection {s:?} (reference|citation|both)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecommendParams {
    pub k: usize,
    pub period_len: u32,
    pub lists: ListSelection,
}

impl Default for RecommendParams {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            period_len: DEFAULT_PERIOD_LEN,
            lists: ListSelection::Both,
        }
    }
}

/// One row of a ranked output list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedArticle {
    pub rank: usize,
    pub id: ArticleId,
    pub title: String,
    pub year: i32,
    pub abstract_sim: f64,
    pub abstract_imputed: bool,
    pub title_sim: f64,
    pub node_sim: f64,
    pub weighted_sim: f64,
    pub fundamental_score: Option<f64>,
    pub citation_count: u64,
}

impl RankedArticle {
    fn from_scored(rank: usize, s: &ScoredArticle) -> Self {
        Self {
            rank,
            id: s.id.clone(),
            title: s.title.clone(),
            year: s.year,
            abstract_sim: s.sims.abstract_sim,
            abstract_imputed: s.sims.abstract_imputed,
            title_sim: s.sims.title_sim,
            node_sim: s.sims.node_sim,
            weighted_sim: s.weighted_sim,
            fundamental_score: s.fundamental_score,
            citation_count: s.citation_count,
        }
    }
}

fn ranked<'a>(items: impl IntoIterator<Item = &'a ScoredArticle>) -> Vec<RankedArticle> {
    items
        .into_iter()
        .enumerate()
        .map(|(i, s)| RankedArticle::from_scored(i + 1, s))
        .collect()
}

/// Top-k of one publication period, `start..=end` inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodRecommendation {
    pub start: i32,
    pub end: i32,
    pub articles: Vec<RankedArticle>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ListRecommendation {
    pub candidate_count: usize,
    pub top_k_overall: Vec<RankedArticle>,
    pub top_k_per_period: Vec<PeriodRecommendation>,
    pub fundamental: Vec<RankedArticle>,
}

impl ListRecommendation {
    pub fn empty() -> Self {
        Self {
            candidate_count: 0,
            top_k_overall: Vec::new(),
            top_k_per_period: Vec::new(),
            fundamental: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendationResult {
    pub matched: ArticleId,
    pub matched_title: String,
    pub k: usize,
    pub period_len: u32,
    pub weights: WeightConfig,
    pub reference: Option<ListRecommendation>,
    pub citation: Option<ListRecommendation>,
}

/// Period buckets anchored at `anchor_year`; the last one is clipped to `last_year`.
pub fn period_of(year: i32, anchor_year: i32, period_len: u32, last_year: i32) -> (i32, i32) {
    let len = period_len as i32;
    let start = anchor_year + (year - anchor_year).div_euclid(len) * len;
    (start, (start + len - 1).min(last_year.max(start)))
}

/// Steps 3 and 4 over an already scored list.
pub fn summarize_list(
    scored: &[ScoredArticle],
    k: usize,
    period_len: u32,
    year_range: (i32, i32),
) -> ListRecommendation {
    let mut periods: BTreeMap<(i32, i32), Vec<&ScoredArticle>> = BTreeMap::new();
    for s in scored {
        periods
            .entry(period_of(s.year, year_range.0, period_len, year_range.1))
            .or_default()
            .push(s);
    }
    let mut by_fundamental: Vec<&ScoredArticle> = scored.iter().collect();
    by_fundamental.sort_by(|a, b| {
        rank_order(
            a.fundamental_score.unwrap_or(0.0),
            a,
            b.fundamental_score.unwrap_or(0.0),
            b,
        )
    });
    ListRecommendation {
        candidate_count: scored.len(),
        top_k_overall: ranked(scored.iter().take(k)),
        top_k_per_period: periods
            .into_iter()
            .map(|((start, end), items)| PeriodRecommendation {
                start,
                end,
                articles: ranked(items.into_iter().take(k)),
            })
            .collect(),
        fundamental: ranked(by_fundamental.into_iter().take(k)),
    }
}

/// Full recommendation for one matched article.
pub fn recommend(
    corpus: &Corpus,
    g: &CitationGraph,
    store: &EmbeddingStore,
    matched: &ArticleId,
    weights: &WeightConfig,
    params: &RecommendParams,
) -> Result<RecommendationResult, RecommendError> {
    if params.k == 0 {
        return Err(RecommendError::NonPositive("k"));
    }
    if params.period_len == 0 {
        return Err(RecommendError::NonPositive("period_len"));
    }
    let node = g.node(matched)?;
    let sets = candidate_sets(g, node);
    let year_range = corpus.year_range().unwrap_or((0, 0));
    let run = |list: ListKind, candidates: &[NodeIx]| {
        params.lists.includes(list).then(|| {
            let scored =
                score_candidates(corpus, g, store, node, candidates, weights.for_list(list));
            summarize_list(&scored, params.k, params.period_len, year_range)
        })
    };
    let article = &corpus.articles()[node as usize];
    Ok(RecommendationResult {
        matched: matched.clone(),
        matched_title: article.title.clone(),
        k: params.k,
        period_len: params.period_len,
        weights: *weights,
        reference: run(ListKind::Reference, &sets.reference_list),
        citation: run(ListKind::Citation, &sets.citation_list),
    })
}
