//! Plain-text rendering for terminal output.

use std::fmt::Write;

use litrec_core::corpus::ArticleId;
use litrec_core::recommend::{ListRecommendation, RankedArticle, RecommendationResult};
use litrec_core::SearchHit;

pub fn cycle_line(cycle: &[ArticleId]) -> String {
    let mut s = String::from("cycle found: ");
    for id in cycle {
        let _ = write!(s, "{id} -> ");
    }
    if let Some(first) = cycle.first() {
        let _ = write!(s, "{first}");
    }
    s
}

fn clip(s: &str, n: usize) -> String {
    if s.chars().count() <= n {
        s.to_owned()
    } else {
        let mut t: String = s.chars().take(n.saturating_sub(1)).collect();
        t.push('…');
        t
    }
}

pub fn search_table(hits: &[SearchHit]) -> String {
    let mut s = format!("{:>3}  {:<24} {:>6} {:>4}  title\n", "#", "id", "score", "year");
    for (i, h) in hits.iter().enumerate() {
        let _ = writeln!(
            s,
            "{:>3}  {:<24} {:>6.3} {:>4}  {}",
            i + 1,
            clip(h.id.as_str(), 24),
            h.score,
            h.year,
            clip(&h.title, 80)
        );
    }
    s
}

fn rows(s: &mut String, articles: &[RankedArticle], score_fundamental: bool) {
    let _ = writeln!(
        s,
        "  {:>3}  {:<24} {:>4} {:>7} {:>7} {:>7} {:>7} {:>7}  title",
        "#", "id", "year", "score", "abs", "title", "node", "cites"
    );
    for a in articles {
        let score = if score_fundamental {
            a.fundamental_score.unwrap_or(f64::NAN)
        } else {
            a.weighted_sim
        };
        let _ = writeln!(
            s,
            "  {:>3}  {:<24} {:>4} {:>7.4} {:>6.4}{} {:>7.4} {:>7.4} {:>7}  {}",
            a.rank,
            clip(a.id.as_str(), 24),
            a.year,
            score,
            a.abstract_sim,
            if a.abstract_imputed { "*" } else { " " },
            a.title_sim,
            a.node_sim,
            a.citation_count,
            clip(&a.title, 70)
        );
    }
}

fn list(s: &mut String, name: &str, l: &ListRecommendation, k: usize) {
    let _ = writeln!(s, "\n{name} list: {} candidates", l.candidate_count);
    if l.candidate_count == 0 {
        return;
    }
    let _ = writeln!(s, "\n top {k} by weighted similarity");
    rows(s, &l.top_k_overall, false);
    for p in &l.top_k_per_period {
        let _ = writeln!(s, "\n top {k} in {}-{}", p.start, p.end);
        rows(s, &p.articles, false);
    }
    let _ = writeln!(s, "\n top {k} by fundamental score");
    rows(s, &l.fundamental, true);
}

pub fn recommendation(r: &RecommendationResult) -> String {
    let mut s = format!("matched: {} \"{}\"\n", r.matched, r.matched_title);
    let v = r.weights.values();
    let _ = writeln!(
        s,
        "weights: reference ({:.3}, {:.3}, {:.3} | {:.3}, {:.3})  citation ({:.3}, {:.3}, {:.3} | {:.3}, {:.3})",
        v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8], v[9]
    );
    if let Some(l) = &r.reference {
        list(&mut s, "REFERENCE", l, r.k);
    }
    if let Some(l) = &r.citation {
        list(&mut s, "CITATION", l, r.k);
    }
    s.push_str("\n* abstract similarity imputed (missing abstract or embedding)\n");
    s
}
