//! Random corpora and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap, HashSet};

use litrec_core::corpus::{Article, ArticleId, Corpus};
use litrec_core::graph::CitationGraph;
use litrec_core::textsim::{EmbeddingStore, EmbeddingVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const VOCAB: [&str; 12] = [
    "lasso", "adaptive", "sparse", "regression", "bayesian", "network", "kernel", "graph",
    "estimation", "model", "selection", "spectral",
];

pub const EMBED_DIM: usize = 6;

#[derive(Debug)]
pub struct World {
    pub corpus: Corpus,
    pub graph: CitationGraph,
    pub store: EmbeddingStore,
    /// `adj[i][j]`: article i cites article j, in corpus order.
    pub adj: Vec<Vec<bool>>,
}

/// Zero-padded ids so that corpus order, node order and id order coincide.
pub fn id(i: usize) -> ArticleId {
    ArticleId::new(format!("a{i:03}")).unwrap()
}

/// A random DAG where article i only cites articles j < i.
pub fn random_world(seed: u64, n: usize, edge_p: f64) -> World {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut articles = Vec::with_capacity(n);
    let mut adj = vec![vec![false; n]; n];
    let mut store = EmbeddingStore::new("test", EMBED_DIM);
    for i in 0..n {
        let refs: Vec<ArticleId> = (0..i)
            .filter(|_| rng.random_bool(edge_p))
            .inspect(|&j| adj[i][j] = true)
            .map(id)
            .collect();
        let words = rng.random_range(1..=5);
        let title: Vec<&str> = (0..words)
            .map(|_| VOCAB[rng.random_range(0..VOCAB.len())])
            .collect();
        let has_abstract = rng.random_bool(0.85);
        if has_abstract && rng.random_bool(0.9) {
            let v: Vec<f32> = (0..EMBED_DIM).map(|_| rng.random_range(-1.0..1.0)).collect();
            store.insert(id(i), EmbeddingVector::new(v).unwrap()).unwrap();
        }
        articles.push(Article {
            id: id(i),
            title: title.join(" "),
            authors: vec!["Doe, J.".into()],
            publisher: "Journal of Tests".into(),
            year: 1990 + rng.random_range(0..25),
            abstract_text: has_abstract.then(|| format!("abstract {i}")),
            keywords: Vec::new(),
            citation_count: rng.random_bool(0.8).then(|| rng.random_range(0..500)),
            references: refs,
        });
    }
    let (corpus, _) = Corpus::from_articles(articles).unwrap();
    let graph = CitationGraph::build(&corpus);
    World {
        corpus,
        graph,
        store,
        adj,
    }
}

fn bool_mat_mul(a: &[Vec<bool>], b: &[Vec<bool>]) -> Vec<Vec<bool>> {
    let n = a.len();
    let mut c = vec![vec![false; n]; n];
    for i in 0..n {
        for k in 0..n {
            if a[i][k] {
                for j in 0..n {
                    c[i][j] |= b[k][j];
                }
            }
        }
    }
    c
}

/// Union of A^1..A^k, diagonal removed.
pub fn matrix_power_closure(adj: &[Vec<bool>], k: usize) -> Vec<Vec<bool>> {
    let n = adj.len();
    let mut power = adj.to_vec();
    let mut reach = adj.to_vec();
    for _ in 1..k {
        power = bool_mat_mul(&power, adj);
        for i in 0..n {
            for j in 0..n {
                reach[i][j] |= power[i][j];
            }
        }
    }
    for (i, row) in reach.iter_mut().enumerate() {
        row[i] = false;
    }
    reach
}

/// All-pairs shortest path lengths, `None` when unreachable.
pub fn floyd_warshall(adj: &[Vec<bool>]) -> Vec<Vec<Option<usize>>> {
    let n = adj.len();
    let mut d: Vec<Vec<Option<usize>>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        Some(0)
                    } else if adj[i][j] {
                        Some(1)
                    } else {
                        None
                    }
                })
                .collect()
        })
        .collect();
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if let (Some(a), Some(b)) = (d[i][k], d[k][j]) {
                    if d[i][j].is_none_or(|c| a + b < c) {
                        d[i][j] = Some(a + b);
                    }
                }
            }
        }
    }
    d
}

pub fn histogram_to(dist: &[Vec<Option<usize>>], target: usize) -> BTreeMap<usize, usize> {
    let mut h = BTreeMap::new();
    for (s, row) in dist.iter().enumerate() {
        if s != target {
            if let Some(d) = row[target] {
                *h.entry(d).or_insert(0) += 1;
            }
        }
    }
    h
}

pub fn common_refs(adj: &[Vec<bool>], a: usize, b: usize) -> usize {
    let sa: HashSet<usize> = (0..adj.len()).filter(|&j| adj[a][j]).collect();
    let sb: HashSet<usize> = (0..adj.len()).filter(|&j| adj[b][j]).collect();
    sa.intersection(&sb).count()
}

fn words(s: &str) -> HashMap<String, f64> {
    let mut m = HashMap::new();
    for w in s
        .to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
    {
        *m.entry(w.to_owned()).or_insert(0.0) += 1.0;
    }
    m
}

pub fn bow_cosine(a: &str, b: &str) -> f64 {
    let (x, y) = (words(a), words(b));
    let dot: f64 = x.iter().map(|(w, c)| c * y.get(w).unwrap_or(&0.0)).sum();
    let nx: f64 = x.values().map(|c| c * c).sum::<f64>().sqrt();
    let ny: f64 = y.values().map(|c| c * c).sum::<f64>().sqrt();
    if nx == 0.0 || ny == 0.0 {
        0.0
    } else {
        dot / (nx * ny)
    }
}

pub fn vec_cosine(u: &[f32], v: &[f32]) -> Option<f64> {
    let dot: f64 = u.iter().zip(v).map(|(a, b)| *a as f64 * *b as f64).sum();
    let nu: f64 = u.iter().map(|a| (*a as f64).powi(2)).sum::<f64>().sqrt();
    let nv: f64 = v.iter().map(|a| (*a as f64).powi(2)).sum::<f64>().sqrt();
    (nu > 0.0 && nv > 0.0).then(|| dot / (nu * nv))
}

fn minmax(xs: &[f64]) -> Vec<f64> {
    let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    xs.iter()
        .map(|x| if hi > lo { (x - lo) / (hi - lo) } else { 0.0 })
        .collect()
}

#[derive(Debug, Clone)]
pub struct OracleRow {
    pub id: ArticleId,
    pub year: i32,
    pub weighted: f64,
    pub fundamental: f64,
}

/// Exhaustive scoring of the candidates of `q` for one list.
pub fn oracle_scores(
    w: &World,
    q: usize,
    candidates: &[usize],
    sim_w: [f64; 3],
    fund_w: [f64; 2],
) -> Vec<OracleRow> {
    let arts = w.corpus.articles();
    let qa = &arts[q];
    let qv = qa
        .abstract_text
        .as_ref()
        .and_then(|_| w.store.get(&qa.id))
        .map(|v| v.values().to_vec());
    let raw_abs: Vec<Option<f64>> = candidates
        .iter()
        .map(|&c| {
            let qv = qv.as_ref()?;
            arts[c].abstract_text.as_ref()?;
            let cv = w.store.get(&arts[c].id)?;
            vec_cosine(qv, cv.values())
        })
        .collect();
    let known: Vec<f64> = raw_abs.iter().flatten().copied().collect();
    let mean = if known.is_empty() {
        0.0
    } else {
        known.iter().sum::<f64>() / known.len() as f64
    };
    let node = minmax(
        &candidates
            .iter()
            .map(|&c| common_refs(&w.adj, q, c) as f64)
            .collect::<Vec<_>>(),
    );
    let cites = minmax(
        &candidates
            .iter()
            .map(|&c| {
                arts[c]
                    .citation_count
                    .unwrap_or_else(|| (0..w.adj.len()).filter(|&i| w.adj[i][c]).count() as u64)
                    as f64
            })
            .collect::<Vec<_>>(),
    );
    candidates
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let a = raw_abs[i].unwrap_or(mean);
            let t = bow_cosine(&qa.title, &arts[c].title);
            let weighted = sim_w[0] * a + sim_w[1] * t + sim_w[2] * node[i];
            OracleRow {
                id: arts[c].id.clone(),
                year: arts[c].year,
                weighted,
                fundamental: fund_w[0] * cites[i] + fund_w[1] * weighted,
            }
        })
        .collect()
}

pub fn oracle_sort(rows: &mut [OracleRow], by: impl Fn(&OracleRow) -> f64) {
    rows.sort_by(|a, b| {
        by(b)
            .partial_cmp(&by(a))
            .unwrap()
            .then(b.year.cmp(&a.year))
            .then(a.id.cmp(&b.id))
    });
}

/// Same ranking up to reorderings among scores within `tol`: scores agree
/// position by position, and every returned id carries its oracle score.
/// `want` is the full oracle ranking; `got` is compared to its first `k`.
pub fn rankings_agree(
    got: &[(ArticleId, f64)],
    want: &[(ArticleId, f64)],
    k: usize,
    tol: f64,
) -> bool {
    let by_id: HashMap<&ArticleId, f64> = want.iter().map(|(i, s)| (i, *s)).collect();
    let want = &want[..k.min(want.len())];
    got.len() == want.len()
        && got.iter().zip(want).all(|((gi, gs), (wi, ws))| {
            (gs - ws).abs() <= tol
                && (gi == wi || by_id.get(gi).is_some_and(|s| (s - gs).abs() <= tol))
        })
}

/// Reference and citation candidate positions by the oracle closure.
pub fn oracle_candidates(w: &World, q: usize, reach3: &[Vec<bool>]) -> (Vec<usize>, Vec<usize>) {
    let n = w.adj.len();
    let reference: Vec<usize> = (0..n).filter(|&j| reach3[q][j]).collect();
    let citation: Vec<usize> = (0..n)
        .filter(|&i| w.adj[i][q] && i != q && !reach3[q][i])
        .collect();
    (reference, citation)
}

#[derive(Debug, Default)]
pub struct OracleReport {
    pub dags: usize,
    pub checks: usize,
    pub mismatches: Vec<String>,
}

/// Compare every graph query and the recommendation lists with the brute
/// force oracles on `dags` random DAGs with n in 2..=50.
pub fn run_oracle_suite(dags: usize, base_seed: u64) -> OracleReport {
    use litrec_core::recommend::{recommend, ListSelection, RecommendParams, WeightConfig};

    let mut report = OracleReport::default();
    let mut meta = ChaCha8Rng::seed_from_u64(base_seed);
    for d in 0..dags {
        let n = meta.random_range(2..=50);
        let p = meta.random_range(0.02..0.3);
        let seed = meta.random::<u64>();
        let w = random_world(seed, n, p);
        report.dags += 1;
        let tag = |what: &str| format!("dag {d} (seed {seed}, n {n}): {what}");
        let mut check = |ok: bool, what: String| {
            report.checks += 1;
            if !ok {
                report.mismatches.push(what);
            }
        };

        let closures: Vec<Vec<Vec<bool>>> =
            (1..=3).map(|k| matrix_power_closure(&w.adj, k)).collect();
        let dist = floyd_warshall(&w.adj);
        for u in 0..n {
            for (k, reach) in closures.iter().enumerate() {
                let got = w.graph.k_hop_out_closure(&id(u), k + 1).unwrap();
                let want: std::collections::BTreeSet<ArticleId> =
                    (0..n).filter(|&v| reach[u][v]).map(id).collect();
                check(got == want, tag(&format!("closure of {u} at k={}", k + 1)));
            }
            let got = w.graph.shortest_path_lengths_to(&id(u)).unwrap();
            check(got == histogram_to(&dist, u), tag(&format!("histogram to {u}")));
            for v in 0..n {
                let got = w.graph.common_out_neighbors(&id(u), &id(v)).unwrap();
                check(got == common_refs(&w.adj, u, v), tag(&format!("common refs {u},{v}")));
            }
        }

        let wr = |rng: &mut ChaCha8Rng| {
            let a: f64 = rng.random();
            let b: f64 = rng.random::<f64>() * (1.0 - a);
            let f: f64 = rng.random();
            ([a, b, 1.0 - a - b], [f, 1.0 - f])
        };
        let (rs, rf) = wr(&mut meta);
        let (cs, cf) = wr(&mut meta);
        let weights = WeightConfig::from_values(&[
            rs[0], rs[1], rs[2], rf[0], rf[1], cs[0], cs[1], cs[2], cf[0], cf[1],
        ])
        .unwrap();
        let k = meta.random_range(1..=12);
        let params = RecommendParams {
            k,
            period_len: 5,
            lists: ListSelection::Both,
        };
        let q = meta.random_range(0..n);
        let got = recommend(&w.corpus, &w.graph, &w.store, &id(q), &weights, &params).unwrap();
        let (ref_c, cit_c) = oracle_candidates(&w, q, &closures[2]);
        for (name, cands, list, sw, fw) in [
            ("reference", ref_c, got.reference.as_ref().unwrap(), rs, rf),
            ("citation", cit_c, got.citation.as_ref().unwrap(), cs, cf),
        ] {
            check(
                list.candidate_count == cands.len(),
                tag(&format!("{name} candidate count for {q}")),
            );
            if cands.is_empty() {
                continue;
            }
            let mut rows = oracle_scores(&w, q, &cands, sw, fw);
            oracle_sort(&mut rows, |r| r.weighted);
            let want: Vec<_> = rows.iter().map(|r| (r.id.clone(), r.weighted)).collect();
            let have: Vec<_> = list
                .top_k_overall
                .iter()
                .map(|r| (r.id.clone(), r.weighted_sim))
                .collect();
            check(
                rankings_agree(&have, &want, k, 1e-12),
                tag(&format!("{name} top-{k} for {q}")),
            );
            oracle_sort(&mut rows, |r| r.fundamental);
            let want: Vec<_> = rows.iter().map(|r| (r.id.clone(), r.fundamental)).collect();
            let have: Vec<_> = list
                .fundamental
                .iter()
                .map(|r| (r.id.clone(), r.fundamental_score.unwrap_or(f64::NAN)))
                .collect();
            check(
                rankings_agree(&have, &want, k, 1e-12),
                tag(&format!("{name} fundamental top-{k} for {q}")),
            );
        }
    }
    report
}

/// Thirty articles in three clusters. Each query cites three true
/// references that share its abstract direction and title words; each true
/// reference cites two distractors with unrelated abstracts and titles, so
/// the distractors land in the query's 2-hop candidate pool.
pub fn planted_world() -> (World, Vec<ArticleId>) {
    const DIM: usize = 8;
    let topics = [
        ["sparse", "lasso", "penalty"],
        ["bayesian", "posterior", "sampling"],
        ["spectral", "graph", "clustering"],
    ];
    let fillers = ["quantum", "turbine", "enzyme", "glacier", "sonnet", "mortgage"];
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut store = EmbeddingStore::new("planted", DIM);
    let mut articles = Vec::new();
    let mut queries = Vec::new();
    let mut embed = |store: &mut EmbeddingStore, aid: &ArticleId, axis: usize| {
        let v: Vec<f32> = (0..DIM)
            .map(|d| if d == axis { 1.0 } else { rng.random_range(-0.05..0.05) })
            .collect();
        store.insert(aid.clone(), EmbeddingVector::new(v).unwrap()).unwrap();
    };
    let mk = |name: String, title: String, year: i32, refs: Vec<ArticleId>| Article {
        id: ArticleId::new(name.clone()).unwrap(),
        title,
        authors: vec!["Doe, J.".into()],
        publisher: "Journal of Tests".into(),
        year,
        abstract_text: Some(format!("abstract of {name}")),
        keywords: Vec::new(),
        citation_count: Some(10),
        references: refs,
    };
    for (c, words) in topics.iter().enumerate() {
        let aid = |s: String| ArticleId::new(s).unwrap();
        let mut truth = Vec::new();
        for t in 0..3 {
            let mut refs = Vec::new();
            for d in 0..2 {
                let name = format!("c{c}d{}", 2 * t + d);
                let title = format!("{} {} notes", fillers[2 * t + d], fillers[(2 * t + d + c + 1) % 6]);
                embed(&mut store, &aid(name.clone()), 3 + (2 * t + d) % 5);
                articles.push(mk(name.clone(), title, 1990 + 2 * t as i32 + d as i32, Vec::new()));
                refs.push(aid(name));
            }
            let name = format!("c{c}t{t}");
            embed(&mut store, &aid(name.clone()), c);
            articles.push(mk(name.clone(), format!("{} {} {} revisited", words[0], words[1], words[t]), 2000 + t as i32, refs));
            truth.push(aid(name));
        }
        let name = format!("c{c}q");
        embed(&mut store, &aid(name.clone()), c);
        articles.push(mk(name.clone(), format!("{} {} {}", words[0], words[1], words[2]), 2010, truth));
        queries.push(aid(name));
    }
    let (corpus, _) = Corpus::from_articles(articles).unwrap();
    let graph = CitationGraph::build(&corpus);
    let n = graph.node_count();
    let mut adj = vec![vec![false; n]; n];
    for u in 0..n {
        for &v in graph.out_row(u as u32) {
            adj[u][v as usize] = true;
        }
    }
    (
        World {
            corpus,
            graph,
            store,
            adj,
        },
        queries,
    )
}
