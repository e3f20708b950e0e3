//! Reference-list reconstruction metrics.
//!
//! For a case article, its in-dataset references are the ground truth. The
//! REFERENCE-list pipeline is run for the article as-is (its own out-edges
//! are kept, so the truth competes against the deeper 2-3 hop candidates)
//! and the ranking is scored with hit@k, recall@20 and best rank.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{ArticleId, Corpus};
use crate::graph::CitationGraph;
use crate::recommend::{candidate_sets, score_candidates, ListWeights};
use crate::text::normalize_title;
use crate::textsim::EmbeddingStore;

pub const DEFAULT_KS: [usize; 3] = [1, 5, 10];
pub const RECALL_DEPTH: usize = 20;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("unknown article id {0:?}")]
    UnknownId(String),
    #[error("article {0} has no references in the dataset")]
    NoReferences(String),
    #[error("no evaluable cases after skipping")]
    NoCases,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalCase {
    pub article: ArticleId,
    pub ground_truth: BTreeSet<ArticleId>,
}

impl EvalCase {
    /// The article's direct in-dataset references as ground truth.
    pub fn for_article(g: &CitationGraph, article: &ArticleId) -> Result<Self, EvalError> {
        let ground_truth = g
            .out_neighbors(article)
            .map_err(|_| EvalError::UnknownId(article.to_string()))?;
        if ground_truth.is_empty() {
            return Err(EvalError::NoReferences(article.to_string()));
        }
        Ok(Self {
            article: article.clone(),
            ground_truth,
        })
    }

    pub fn refs_in_dataset(&self) -> usize {
        self.ground_truth.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseMetrics {
    pub article: ArticleId,
    pub year: i32,
    pub refs_in_dataset: usize,
    pub candidate_count: usize,
    /// hit@k with k = refs_in_dataset.
    pub hit_rate: f64,
    /// hit@k for every requested k, plus refs_in_dataset and 20.
    pub hit_at: BTreeMap<usize, f64>,
    pub recall_at_20: f64,
    /// 1-based rank of the best-placed ground-truth article.
    pub best_rank: Option<usize>,
}

impl CaseMetrics {
    pub fn hit(&self, k: usize) -> Option<f64> {
        self.hit_at.get(&k).copied()
    }
}

/// `|top-k ∩ truth| / k`.
pub fn hit_at_k(ranking: &[ArticleId], truth: &BTreeSet<ArticleId>, k: usize) -> f64 {
    hits_in_top(ranking, truth, k) as f64 / k as f64
}

/// `|top-k ∩ truth| / |truth|`.
pub fn recall_at_k(ranking: &[ArticleId], truth: &BTreeSet<ArticleId>, k: usize) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    hits_in_top(ranking, truth, k) as f64 / truth.len() as f64
}

pub fn hits_in_top(ranking: &[ArticleId], truth: &BTreeSet<ArticleId>, k: usize) -> usize {
    ranking.iter().take(k).filter(|id| truth.contains(*id)).count()
}

pub fn best_rank(ranking: &[ArticleId], truth: &BTreeSet<ArticleId>) -> Option<usize> {
    ranking.iter().position(|id| truth.contains(id)).map(|p| p + 1)
}

/// Metrics for a ranking against a truth set.
pub fn metrics_for_ranking(
    article: ArticleId,
    year: i32,
    ranking: &[ArticleId],
    truth: &BTreeSet<ArticleId>,
    ks: &[usize],
) -> CaseMetrics {
    let refs = truth.len();
    let hit_at: BTreeMap<usize, f64> = ks
        .iter()
        .copied()
        .chain([refs, RECALL_DEPTH])
        .filter(|&k| k > 0)
        .map(|k| (k, hit_at_k(ranking, truth, k)))
        .collect();
    CaseMetrics {
        article,
        year,
        refs_in_dataset: refs,
        candidate_count: ranking.len(),
        hit_rate: hit_at_k(ranking, truth, refs.max(1)),
        hit_at,
        recall_at_20: recall_at_k(ranking, truth, RECALL_DEPTH),
        best_rank: best_rank(ranking, truth),
    }
}

/// Rank the case article's REFERENCE list and score it.
pub fn reconstruct_case(
    corpus: &Corpus,
    g: &CitationGraph,
    store: &EmbeddingStore,
    case: &EvalCase,
    weights: &ListWeights,
    ks: &[usize],
) -> Result<CaseMetrics, EvalError> {
    if case.ground_truth.is_empty() {
        return Err(EvalError::NoReferences(case.article.to_string()));
    }
    let node = g
        .node(&case.article)
        .map_err(|_| EvalError::UnknownId(case.article.to_string()))?;
    let sets = candidate_sets(g, node);
    let scored = score_candidates(corpus, g, store, node, &sets.reference_list, weights);
    let ranking: Vec<ArticleId> = scored.into_iter().map(|s| s.id).collect();
    let year = corpus.articles()[node as usize].year;
    Ok(metrics_for_ranking(
        case.article.clone(),
        year,
        &ranking,
        &case.ground_truth,
        ks,
    ))
}

/// How evaluation cases are chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseSelection {
    /// Explicit ids, or exact titles for entries that are not ids.
    List(Vec<String>),
    /// Uniform sample without replacement among articles with at least one
    /// in-dataset reference.
    Sample { n: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedCase {
    pub entry: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateMetrics {
    pub cases: usize,
    pub mean_hit_rate: f64,
    pub mean_hit_at: BTreeMap<usize, f64>,
    pub mean_recall_at_20: f64,
    /// Mean over cases where some ground-truth article was ranked.
    pub mean_best_rank: Option<f64>,
}

impl AggregateMetrics {
    pub fn over<'a>(cases: impl IntoIterator<Item = &'a CaseMetrics>, ks: &[usize]) -> Self {
        let cases: Vec<&CaseMetrics> = cases.into_iter().collect();
        let n = cases.len();
        let mean = |f: &dyn Fn(&CaseMetrics) -> f64| {
            if n == 0 {
                0.0
            } else {
                cases.iter().map(|c| f(c)).sum::<f64>() / n as f64
            }
        };
        let ranks: Vec<usize> = cases.iter().filter_map(|c| c.best_rank).collect();
        Self {
            cases: n,
            mean_hit_rate: mean(&|c| c.hit_rate),
            mean_hit_at: ks
                .iter()
                .copied()
                .chain([RECALL_DEPTH])
                .map(|k| (k, mean(&|c| c.hit(k).unwrap_or(0.0))))
                .collect(),
            mean_recall_at_20: mean(&|c| c.recall_at_20),
            mean_best_rank: (!ranks.is_empty())
                .then(|| ranks.iter().sum::<usize>() as f64 / ranks.len() as f64),
        }
    }
}

/// Figures reported for the original system with vendor embeddings,
/// carried for side-by-side comparison. Not reproducible with other
/// embeddings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineFigures {
    pub review_mean_hit_rate: f64,
    pub hit_at_1: f64,
    pub hit_at_5: f64,
    pub hit_at_10: f64,
    pub recall_at_20: f64,
}

pub const BASELINE: BaselineFigures = BaselineFigures {
    review_mean_hit_rate: 0.7,
    hit_at_1: 0.85,
    hit_at_5: 0.44,
    hit_at_10: 0.28,
    recall_at_20: 0.76,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub ks: Vec<usize>,
    pub weights: ListWeights,
    pub cases: Vec<CaseMetrics>,
    pub skipped: Vec<SkippedCase>,
    pub aggregate: AggregateMetrics,
    pub per_year: BTreeMap<i32, AggregateMetrics>,
    pub baseline: BaselineFigures,
}

/// Resolve a selection into evaluable cases, recording skips.
pub fn select_cases(
    corpus: &Corpus,
    g: &CitationGraph,
    selection: &CaseSelection,
) -> (Vec<EvalCase>, Vec<SkippedCase>) {
    let mut cases = Vec::new();
    let mut skipped = Vec::new();
    match selection {
        CaseSelection::List(entries) => {
            let mut seen = HashSet::new();
            for entry in entries {
                let resolved = ArticleId::new(entry.as_str())
                    .ok()
                    .filter(|id| corpus.get(id).is_some())
                    .or_else(|| {
                        let wanted = normalize_title(entry);
                        corpus
                            .articles()
                            .iter()
                            .enumerate()
                            .find(|(i, _)| corpus.normalized_title(*i) == wanted)
                            .map(|(_, a)| a.id.clone())
                    });
                let Some(id) = resolved else {
                    skipped.push(SkippedCase {
                        entry: entry.clone(),
                        reason: "no article with this id or exact title".into(),
                    });
                    continue;
                };
                if !seen.insert(id.clone()) {
                    continue;
                }
                match EvalCase::for_article(g, &id) {
                    Ok(c) => cases.push(c),
                    Err(e) => skipped.push(SkippedCase {
                        entry: entry.clone(),
                        reason: e.to_string(),
                    }),
                }
            }
        }
        CaseSelection::Sample { n, seed } => {
            let mut eligible: Vec<&ArticleId> = g
                .ids()
                .iter()
                .enumerate()
                .filter(|(i, _)| g.out_degree(*i as u32) > 0)
                .map(|(_, id)| id)
                .collect();
            eligible.sort();
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut picked: Vec<usize> =
                rand::seq::index::sample(&mut rng, eligible.len(), (*n).min(eligible.len()))
                    .into_vec();
            picked.sort_unstable();
            for i in picked {
                cases.push(EvalCase::for_article(g, eligible[i]).expect("eligible case"));
            }
        }
    }
    (cases, skipped)
}

pub fn run_evaluation(
    corpus: &Corpus,
    g: &CitationGraph,
    store: &EmbeddingStore,
    selection: &CaseSelection,
    weights: &ListWeights,
    ks: &[usize],
) -> Result<MetricsReport, EvalError> {
    let (cases, skipped) = select_cases(corpus, g, selection);
    if cases.is_empty() {
        return Err(EvalError::NoCases);
    }
    let mut metrics = cases
        .par_iter()
        .map(|c| reconstruct_case(corpus, g, store, c, weights, ks))
        .collect::<Result<Vec<_>, _>>()?;
    metrics.sort_by(|a, b| a.article.cmp(&b.article));

    let mut years: BTreeMap<i32, Vec<&CaseMetrics>> = BTreeMap::new();
    for m in &metrics {
        years.entry(m.year).or_default().push(m);
    }
    let per_year = years
        .into_iter()
        .map(|(y, ms)| (y, AggregateMetrics::over(ms, ks)))
        .collect();
    Ok(MetricsReport {
        ks: ks.to_vec(),
        weights: *weights,
        aggregate: AggregateMetrics::over(&metrics, ks),
        cases: metrics,
        skipped,
        per_year,
        baseline: BASELINE,
    })
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".into(), |v| format!("{v:.4}"))
}

impl MetricsReport {
    /// One row per case, then an aggregate footer and the baseline figures.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let ks: Vec<usize> = self.ks.iter().copied().chain([RECALL_DEPTH]).collect();
        write!(w, "id,year,refs_in_dataset,hit_rate")?;
        for k in &self.ks {
            write!(w, ",hit@{k}")?;
        }
        writeln!(w, ",recall@20,best_rank")?;
        for c in &self.cases {
            write!(w, "{},{},{},{:.4}", c.article, c.year, c.refs_in_dataset, c.hit_rate)?;
            for k in &self.ks {
                write!(w, ",{}", fmt_opt(c.hit(*k)))?;
            }
            writeln!(
                w,
                ",{:.4},{}",
                c.recall_at_20,
                c.best_rank.map_or_else(|| "-".into(), |r| r.to_string())
            )?;
        }
        let a = &self.aggregate;
        write!(w, "# mean ({} cases),,,{:.4}", a.cases, a.mean_hit_rate)?;
        for k in &self.ks {
            write!(w, ",{}", fmt_opt(a.mean_hit_at.get(k).copied()))?;
        }
        writeln!(
            w,
            ",{:.4},{}",
            a.mean_recall_at_20,
            fmt_opt(a.mean_best_rank)
        )?;
        let _ = ks;
        let b = &self.baseline;
        writeln!(
            w,
            "# baseline (vendor embeddings): review hit rate {:.2}, hit@1 {:.2}, hit@5 {:.2}, hit@10 {:.2}, recall@20 {:.2}",
            b.review_mean_hit_rate, b.hit_at_1, b.hit_at_5, b.hit_at_10, b.recall_at_20
        )?;
        for s in &self.skipped {
            writeln!(w, "# skipped {}: {}", s.entry, s.reason)?;
        }
        Ok(())
    }
}
