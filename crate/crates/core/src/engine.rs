//! Loaded engine state shared by the CLI and the service.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::DataPaths;
use crate::corpus::{Article, ArticleId, Corpus, CorpusError, LoadReport};
use crate::eval::{run_evaluation, CaseSelection, EvalError, MetricsReport};
use crate::graph::{CitationGraph, GraphStats};
use crate::recommend::{
    match_keyword, match_title, recommend, MatchHit, RecommendError, RecommendParams,
    RecommendationResult, WeightConfig, DEFAULT_TITLE_THRESHOLD,
};
use crate::textsim::{EmbeddingStore, TextSimError, DEFAULT_DIM};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Embeddings(#[from] TextSimError),
    #[error(transparent)]
    Recommend(#[from] RecommendError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("no articles file configured")]
    MissingArticles,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMode {
    #[default]
    Title,
    Keyword,
}

impl std::str::FromStr for SearchMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "title" => Ok(Self::Title),
            "keyword" => Ok(Self::Keyword),
            _ => Err(format!("unknown search mode {s:?} (title|keyword)")),
        }
    }
}

/// A match enriched with display metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchHit {
    pub id: ArticleId,
    pub score: f64,
    pub title: String,
    pub year: i32,
    pub publisher: String,
    pub citation_count: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct Engine {
    corpus: Corpus,
    graph: CitationGraph,
    store: EmbeddingStore,
    load_report: LoadReport,
    stats: GraphStats,
}

impl Engine {
    pub fn new(corpus: Corpus, store: EmbeddingStore, load_report: LoadReport) -> Self {
        let graph = CitationGraph::build(&corpus);
        let stats = graph.stats();
        Self {
            corpus,
            graph,
            store,
            load_report,
            stats,
        }
    }

    pub fn load(paths: &DataPaths) -> Result<Self, EngineError> {
        let articles = paths.articles.as_deref().ok_or(EngineError::MissingArticles)?;
        let (corpus, report) = Corpus::load(articles, paths.edges.as_deref())?;
        let store = match &paths.embeddings {
            Some(p) => EmbeddingStore::load(p)?,
            None => EmbeddingStore::new("none", DEFAULT_DIM),
        };
        tracing::info!(
            articles = corpus.len(),
            embeddings = store.len(),
            "engine data loaded"
        );
        Ok(Self::new(corpus, store, report))
    }

    pub fn load_files(
        articles: &Path,
        edges: Option<&Path>,
        embeddings: Option<&Path>,
    ) -> Result<Self, EngineError> {
        Self::load(&DataPaths {
            articles: Some(articles.to_owned()),
            edges: edges.map(Path::to_owned),
            embeddings: embeddings.map(Path::to_owned),
            cache_dir: None,
        })
    }

    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    pub fn graph(&self) -> &CitationGraph {
        &self.graph
    }

    pub fn store(&self) -> &EmbeddingStore {
        &self.store
    }

    pub fn load_report(&self) -> &LoadReport {
        &self.load_report
    }

    pub fn stats(&self) -> &GraphStats {
        &self.stats
    }

    pub fn article(&self, id: &ArticleId) -> Option<&Article> {
        self.corpus.get(id)
    }

    pub fn search(&self, query: &str, mode: SearchMode, m: usize) -> Vec<SearchHit> {
        let hits = match mode {
            SearchMode::Title => match_title(&self.corpus, query, m, DEFAULT_TITLE_THRESHOLD),
            SearchMode::Keyword => match_keyword(&self.corpus, query, m, 1.0),
        };
        hits.into_iter().map(|h| self.enrich(h)).collect()
    }

    fn enrich(&self, hit: MatchHit) -> SearchHit {
        let a = self.corpus.get(&hit.id).expect("match ids come from the corpus");
        SearchHit {
            score: hit.score,
            title: a.title.clone(),
            year: a.year,
            publisher: a.publisher.clone(),
            citation_count: a.citation_count,
            id: hit.id,
        }
    }

    pub fn recommend(
        &self,
        matched: &ArticleId,
        weights: &WeightConfig,
        params: &RecommendParams,
    ) -> Result<RecommendationResult, RecommendError> {
        recommend(&self.corpus, &self.graph, &self.store, matched, weights, params)
    }

    pub fn evaluate(
        &self,
        selection: &CaseSelection,
        weights: &WeightConfig,
        ks: &[usize],
    ) -> Result<MetricsReport, EvalError> {
        run_evaluation(
            &self.corpus,
            &self.graph,
            &self.store,
            selection,
            &weights.reference,
            ks,
        )
    }
}
