//! Locating the article a recommendation starts from.

use std::cmp::Ordering;
use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{ArticleId, Corpus};
use crate::graph::article_contains_phrase;
use crate::text::{normalize_title, tokenize};

/// Minimum fuzzy score for a title to count as a match.
pub const DEFAULT_TITLE_THRESHOLD: f64 = 0.6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchHit {
    pub id: ArticleId,
    pub score: f64,
}

/// `1 - levenshtein / max_len` over normalized titles, in characters.
pub fn fuzzy_score(a: &str, b: &str) -> f64 {
    let (la, lb) = (a.chars().count(), b.chars().count());
    let longest = la.max(lb);
    if longest == 0 {
        return 1.0;
    }
    1.0 - strsim::levenshtein(a, b) as f64 / longest as f64
}

/// Top-`m` articles by fuzzy title score at or above `threshold`.
/// Ties go to the more recent article, then the smaller id.
pub fn match_title(corpus: &Corpus, query: &str, m: usize, threshold: f64) -> Vec<MatchHit> {
    let q = normalize_title(query);
    if q.is_empty() || m == 0 {
        return Vec::new();
    }
    let qlen = q.chars().count();
    let mut hits: Vec<(usize, f64)> = (0..corpus.len())
        .into_par_iter()
        .filter_map(|i| {
            let t = corpus.normalized_title(i);
            let tlen = t.chars().count();
            // The length gap alone bounds the score from above.
            let longest = qlen.max(tlen);
            if longest > 0 && 1.0 - (qlen.abs_diff(tlen) as f64 / longest as f64) < threshold {
                return None;
            }
            let s = fuzzy_score(&q, t);
            (s >= threshold).then_some((i, s))
        })
        .collect();
    let arts = corpus.articles();
    hits.sort_by(|&(i, si), &(j, sj)| {
        sj.total_cmp(&si)
            .then_with(|| arts[j].year.cmp(&arts[i].year))
            .then_with(|| arts[i].id.cmp(&arts[j].id))
    });
    hits.truncate(m);
    hits.into_iter()
        .map(|(i, score)| MatchHit {
            id: arts[i].id.clone(),
            score,
        })
        .collect()
}

/// Articles matching a key phrase.
///
/// An article containing the whole phrase as a contiguous token run in its
/// title or one of its keywords scores 1. Otherwise it scores the fraction
/// of distinct phrase tokens present anywhere in its title and keywords.
/// Only scores at or above `min_score` are kept; ties go to the higher
/// citation count, then the smaller id.
pub fn match_keyword(corpus: &Corpus, phrase: &str, m: usize, min_score: f64) -> Vec<MatchHit> {
    let tokens = tokenize(phrase);
    if tokens.is_empty() || m == 0 {
        return Vec::new();
    }
    let distinct: HashSet<&String> = tokens.iter().collect();
    let arts = corpus.articles();
    let mut hits: Vec<(usize, f64)> = (0..arts.len())
        .into_par_iter()
        .filter_map(|i| {
            let a = &arts[i];
            let score = if article_contains_phrase(a, &tokens) {
                1.0
            } else {
                let mut present: HashSet<String> = tokenize(&a.title).into_iter().collect();
                present.extend(a.keywords.iter().flat_map(|k| tokenize(k)));
                distinct.iter().filter(|t| present.contains(**t)).count() as f64
                    / distinct.len() as f64
            };
            (score > 0.0 && score >= min_score).then_some((i, score))
        })
        .collect();
    hits.sort_by(|&(i, si), &(j, sj)| {
        sj.partial_cmp(&si)
            .unwrap_or(Ordering::Equal)
            .then_with(|| arts[j].citation_count.cmp(&arts[i].citation_count))
            .then_with(|| arts[i].id.cmp(&arts[j].id))
    });
    hits.truncate(m);
    hits.into_iter()
        .map(|(i, score)| MatchHit {
            id: arts[i].id.clone(),
            score,
        })
        .collect()
}
