//! Immutable citation graph in compressed adjacency form.
//!
//! An edge `u -> v` means article `u` cites article `v`. Forward adjacency
//! holds references, reverse adjacency holds citers. Both are sorted per node.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{ArticleId, Corpus};
use crate::text::{contains_token_run, tokenize};

pub type NodeIx = u32;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("unknown article id {0:?}")]
    UnknownId(String),
    #[error("hop count must be at least 1")]
    ZeroHops,
    #[error("density needs at least 2 nodes, graph has {0}")]
    TooFewNodes(usize),
}

/// Compressed sparse adjacency: `targets[offsets[u]..offsets[u + 1]]`.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Csr {
    offsets: Vec<usize>,
    targets: Vec<NodeIx>,
}

impl Csr {
    fn from_pairs(n: usize, pairs: &mut Vec<(NodeIx, NodeIx)>) -> Self {
        pairs.sort_unstable();
        pairs.dedup();
        let mut offsets = vec![0usize; n + 1];
        for &(u, _) in pairs.iter() {
            offsets[u as usize + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let targets = pairs.iter().map(|&(_, v)| v).collect();
        Self { offsets, targets }
    }

    #[inline]
    fn row(&self, u: NodeIx) -> &[NodeIx] {
        let u = u as usize;
        &self.targets[self.offsets[u]..self.offsets[u + 1]]
    }

    fn transpose(&self, n: usize) -> Self {
        let mut pairs: Vec<(NodeIx, NodeIx)> = (0..n as NodeIx)
            .flat_map(|u| self.row(u).iter().map(move |&v| (v, u)))
            .collect();
        Self::from_pairs(n, &mut pairs)
    }
}

#[derive(Debug, Clone)]
pub struct CitationGraph {
    ids: Vec<ArticleId>,
    index: HashMap<ArticleId, NodeIx>,
    out_adj: Csr,
    in_adj: Csr,
}

/// Summary figures for a graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub n: usize,
    pub m: usize,
    /// `2m / (n (n - 1))`; absent for fewer than two nodes.
    pub density: Option<f64>,
    pub max_in_degree: usize,
    /// Article with the largest in-degree (lowest node index on ties).
    pub max_in_degree_id: Option<ArticleId>,
    pub acyclic: bool,
}

impl fmt::Display for GraphStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "n: {}", self.n)?;
        writeln!(f, "m: {}", self.m)?;
        match self.density {
            Some(d) => writeln!(
                f,
                "density: {}% ({})",
                format_significant(d * 100.0, 2),
                format_significant(d, 4)
            )?,
            None => writeln!(f, "density: undefined")?,
        }
        write!(f, "max_in_degree: {}", self.max_in_degree)?;
        if let Some(id) = &self.max_in_degree_id {
            write!(f, " ({id})")?;
        }
        write!(f, "\nacyclic: {}", self.acyclic)
    }
}

/// Fixed-point rendering of `x` with `digits` significant digits.
pub fn format_significant(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    // Rounding can bump the magnitude (9.9996 -> 10.00).
    let rounded: f64 = format!("{:.*e}", digits.saturating_sub(1), x).parse().unwrap();
    let magnitude = magnitude.max(rounded.abs().log10().floor() as i32);
    let decimals = (digits as i32 - 1 - magnitude).max(0) as usize;
    format!("{rounded:.decimals$}")
}

/// Result of the acyclicity diagnostic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Acyclicity {
    pub acyclic: bool,
    /// One directed cycle `[v0, v1, ..., vk]` with `vk -> v0` closing it.
    pub witness: Option<Vec<ArticleId>>,
}

/// Articles matching a phrase and the citations among them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordSubgraph {
    pub nodes: Vec<ArticleId>,
    pub edges: Vec<(ArticleId, ArticleId)>,
    /// Weakly connected components, largest first.
    pub components: Vec<Vec<ArticleId>>,
}

impl KeywordSubgraph {
    pub fn largest_component(&self) -> usize {
        self.components.first().map_or(0, Vec::len)
    }
}

pub fn build_graph(corpus: &Corpus) -> CitationGraph {
    CitationGraph::build(corpus)
}

impl CitationGraph {
    /// One node per article in corpus order, one edge per resolved reference.
    pub fn build(corpus: &Corpus) -> Self {
        let ids: Vec<ArticleId> = corpus.articles().iter().map(|a| a.id.clone()).collect();
        let mut pairs = Vec::new();
        for (u, a) in corpus.articles().iter().enumerate() {
            for r in &a.references {
                if let Some(v) = corpus.position(r) {
                    pairs.push((u as NodeIx, v as NodeIx));
                }
            }
        }
        Self::from_index_pairs(ids, pairs)
    }

    /// Build from explicit node ids and index pairs. Self-loops and
    /// duplicate edges are discarded.
    pub fn from_index_pairs(ids: Vec<ArticleId>, mut pairs: Vec<(NodeIx, NodeIx)>) -> Self {
        let n = ids.len();
        pairs.retain(|&(u, v)| u != v && (u as usize) < n && (v as usize) < n);
        let out_adj = Csr::from_pairs(n, &mut pairs);
        let in_adj = out_adj.transpose(n);
        let index = ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i as NodeIx))
            .collect();
        Self {
            ids,
            index,
            out_adj,
            in_adj,
        }
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.out_adj.targets.len()
    }

    pub fn node(&self, id: &ArticleId) -> Result<NodeIx, GraphError> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| GraphError::UnknownId(id.to_string()))
    }

    pub fn id(&self, node: NodeIx) -> &ArticleId {
        &self.ids[node as usize]
    }

    pub fn ids(&self) -> &[ArticleId] {
        &self.ids
    }

    /// References of `node`, sorted by node index.
    #[inline]
    pub fn out_row(&self, node: NodeIx) -> &[NodeIx] {
        self.out_adj.row(node)
    }

    /// Citers of `node`, sorted by node index.
    #[inline]
    pub fn in_row(&self, node: NodeIx) -> &[NodeIx] {
        self.in_adj.row(node)
    }

    /// True when the reverse adjacency is exactly the transpose of the forward one.
    pub fn is_transpose_consistent(&self) -> bool {
        self.out_adj.transpose(self.node_count()) == self.in_adj
    }

    pub fn out_degree(&self, node: NodeIx) -> usize {
        self.out_row(node).len()
    }

    pub fn in_degree(&self, node: NodeIx) -> usize {
        self.in_row(node).len()
    }

    fn to_id_set(&self, nodes: impl IntoIterator<Item = NodeIx>) -> BTreeSet<ArticleId> {
        nodes.into_iter().map(|v| self.id(v).clone()).collect()
    }

    pub fn out_neighbors(&self, id: &ArticleId) -> Result<BTreeSet<ArticleId>, GraphError> {
        let u = self.node(id)?;
        Ok(self.to_id_set(self.out_row(u).iter().copied()))
    }

    pub fn in_neighbors(&self, id: &ArticleId) -> Result<BTreeSet<ArticleId>, GraphError> {
        let u = self.node(id)?;
        Ok(self.to_id_set(self.in_row(u).iter().copied()))
    }

    /// Nodes reachable from `start` by directed paths of length `1..=k`,
    /// excluding `start`, sorted by node index.
    pub fn k_hop_out(&self, start: NodeIx, k: usize) -> Vec<NodeIx> {
        let mut seen = vec![false; self.node_count()];
        seen[start as usize] = true;
        let mut frontier = vec![start];
        let mut reached = Vec::new();
        for _ in 0..k {
            let mut next = Vec::new();
            for &u in &frontier {
                for &v in self.out_row(u) {
                    if !seen[v as usize] {
                        seen[v as usize] = true;
                        next.push(v);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            reached.extend_from_slice(&next);
            frontier = next;
        }
        reached.sort_unstable();
        reached
    }

    pub fn k_hop_out_closure(
        &self,
        id: &ArticleId,
        k: usize,
    ) -> Result<BTreeSet<ArticleId>, GraphError> {
        if k == 0 {
            return Err(GraphError::ZeroHops);
        }
        let u = self.node(id)?;
        Ok(self.to_id_set(self.k_hop_out(u, k)))
    }

    pub fn density(&self) -> Result<f64, GraphError> {
        density(self.node_count(), self.edge_count())
    }

    /// Histogram of shortest directed path lengths from every other node to
    /// `target`. Breadth-first over citers; nodes with no path are omitted.
    pub fn shortest_path_lengths_to(
        &self,
        target: &ArticleId,
    ) -> Result<BTreeMap<usize, usize>, GraphError> {
        let t = self.node(target)?;
        let mut dist = vec![usize::MAX; self.node_count()];
        dist[t as usize] = 0;
        let mut queue = VecDeque::from([t]);
        let mut hist = BTreeMap::new();
        while let Some(u) = queue.pop_front() {
            let d = dist[u as usize] + 1;
            for &w in self.in_row(u) {
                if dist[w as usize] == usize::MAX {
                    dist[w as usize] = d;
                    *hist.entry(d).or_insert(0) += 1;
                    queue.push_back(w);
                }
            }
        }
        Ok(hist)
    }

    /// Size of the intersection of two nodes' reference sets.
    pub fn common_out(&self, a: NodeIx, b: NodeIx) -> usize {
        sorted_intersection_len(self.out_row(a), self.out_row(b))
    }

    pub fn common_out_neighbors(&self, a: &ArticleId, b: &ArticleId) -> Result<usize, GraphError> {
        Ok(self.common_out(self.node(a)?, self.node(b)?))
    }

    pub fn validate_acyclicity(&self) -> Acyclicity {
        match self.find_cycle() {
            None => Acyclicity {
                acyclic: true,
                witness: None,
            },
            Some(cycle) => Acyclicity {
                acyclic: false,
                witness: Some(cycle.into_iter().map(|v| self.id(v).clone()).collect()),
            },
        }
    }

    fn find_cycle(&self) -> Option<Vec<NodeIx>> {
        const WHITE: u8 = 0;
        const GRAY: u8 = 1;
        const BLACK: u8 = 2;
        let n = self.node_count();
        let mut color = vec![WHITE; n];
        let mut path: Vec<NodeIx> = Vec::new();
        let mut stack: Vec<(NodeIx, usize)> = Vec::new();
        for root in 0..n as NodeIx {
            if color[root as usize] != WHITE {
                continue;
            }
            color[root as usize] = GRAY;
            path.push(root);
            stack.push((root, 0));
            while let Some((u, pos)) = stack.last_mut() {
                let u = *u;
                let row = self.out_row(u);
                if *pos < row.len() {
                    let v = row[*pos];
                    *pos += 1;
                    match color[v as usize] {
                        WHITE => {
                            color[v as usize] = GRAY;
                            path.push(v);
                            stack.push((v, 0));
                        }
                        GRAY => {
                            let start = path.iter().rposition(|&x| x == v).unwrap();
                            return Some(path[start..].to_vec());
                        }
                        _ => {}
                    }
                } else {
                    color[u as usize] = BLACK;
                    path.pop();
                    stack.pop();
                }
            }
        }
        None
    }

    pub fn stats(&self) -> GraphStats {
        let (max_in_degree, max_in_degree_id) = (0..self.node_count() as NodeIx)
            .map(|v| (self.in_degree(v), v))
            .fold((0usize, None), |(best, arg), (d, v)| {
                if arg.is_none() || d > best {
                    (d, Some(v))
                } else {
                    (best, arg)
                }
            });
        GraphStats {
            n: self.node_count(),
            m: self.edge_count(),
            density: self.density().ok(),
            max_in_degree,
            max_in_degree_id: max_in_degree_id.map(|v| self.id(v).clone()),
            acyclic: self.find_cycle().is_none(),
        }
    }
}

/// `2m / (n (n - 1))`.
pub fn density(n: usize, m: usize) -> Result<f64, GraphError> {
    if n < 2 {
        return Err(GraphError::TooFewNodes(n));
    }
    Ok(2.0 * m as f64 / (n as f64 * (n as f64 - 1.0)))
}

pub(crate) fn sorted_intersection_len(a: &[NodeIx], b: &[NodeIx]) -> usize {
    let (mut i, mut j, mut count) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    count
}

/// Articles whose title or any keyword contains `phrase` as a contiguous
/// token run, with the induced subgraph and its weak components.
pub fn keyword_subgraph(corpus: &Corpus, graph: &CitationGraph, phrase: &str) -> KeywordSubgraph {
    let phrase = tokenize(phrase);
    let selected: Vec<NodeIx> = if phrase.is_empty() {
        Vec::new()
    } else {
        corpus
            .articles()
            .iter()
            .enumerate()
            .filter(|(_, a)| article_contains_phrase(a, &phrase))
            .filter_map(|(_, a)| graph.node(&a.id).ok())
            .collect()
    };

    let mut local: HashMap<NodeIx, usize> = HashMap::with_capacity(selected.len());
    for (i, &v) in selected.iter().enumerate() {
        local.insert(v, i);
    }
    let mut edges = Vec::new();
    let mut parent: Vec<usize> = (0..selected.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (i, &u) in selected.iter().enumerate() {
        for &v in graph.out_row(u) {
            if let Some(&j) = local.get(&v) {
                edges.push((graph.id(u).clone(), graph.id(v).clone()));
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<ArticleId>> = BTreeMap::new();
    for (i, &v) in selected.iter().enumerate() {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(graph.id(v).clone());
    }
    let mut components: Vec<Vec<ArticleId>> = groups.into_values().collect();
    for c in &mut components {
        c.sort();
    }
    components.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a[0].cmp(&b[0])));

    KeywordSubgraph {
        nodes: selected.iter().map(|&v| graph.id(v).clone()).collect(),
        edges,
        components,
    }
}

pub(crate) fn article_contains_phrase(a: &crate::corpus::Article, phrase: &[String]) -> bool {
    contains_token_run(&tokenize(&a.title), phrase)
        || a.keywords
            .iter()
            .any(|k| contains_token_run(&tokenize(k), phrase))
}

/// Two-column `length,count` rendering of a path-length histogram.
pub fn write_histogram<W: Write>(hist: &BTreeMap<usize, usize>, mut w: W) -> std::io::Result<()> {
    writeln!(w, "length,count")?;
    for (len, count) in hist {
        writeln!(w, "{len},{count}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::fixtures::{article, id};

    fn graph_of(spec: &[(&str, &[&str])]) -> (Corpus, CitationGraph) {
        let arts = spec
            .iter()
            .map(|(name, refs)| article(name, 2000, refs))
            .collect();
        let (c, _) = Corpus::from_articles(arts).unwrap();
        let g = CitationGraph::build(&c);
        (c, g)
    }

    fn ids(names: &[&str]) -> BTreeSet<ArticleId> {
        names.iter().map(|n| id(n)).collect()
    }

    fn chain5() -> CitationGraph {
        graph_of(&[
            ("A", &["B"]),
            ("B", &["C"]),
            ("C", &["D"]),
            ("D", &["E"]),
            ("E", &[]),
        ])
        .1
    }

    #[test]
    fn single_article_graph() {
        let (_, g) = graph_of(&[("A", &[])]);
        assert_eq!((g.node_count(), g.edge_count()), (1, 0));
        assert_eq!(g.density(), Err(GraphError::TooFewNodes(1)));
        assert!(g.out_neighbors(&id("A")).unwrap().is_empty());
        assert!(g.in_neighbors(&id("A")).unwrap().is_empty());
    }

    #[test]
    fn chain_adjacency() {
        let (_, g) = graph_of(&[("A", &["B"]), ("B", &["C"]), ("C", &[])]);
        assert_eq!(g.out_neighbors(&id("A")).unwrap(), ids(&["B"]));
        assert_eq!(g.in_neighbors(&id("C")).unwrap(), ids(&["B"]));
        assert_eq!(g.in_neighbors(&id("B")).unwrap(), ids(&["A"]));
    }

    #[test]
    fn unknown_id_errors() {
        let g = chain5();
        assert_eq!(
            g.out_neighbors(&id("Z")),
            Err(GraphError::UnknownId("Z".into()))
        );
        assert!(g.k_hop_out_closure(&id("Z"), 3).is_err());
        assert!(g.shortest_path_lengths_to(&id("Z")).is_err());
        assert!(g.common_out_neighbors(&id("A"), &id("Z")).is_err());
    }

    #[test]
    fn three_hop_closure_on_chain() {
        let g = chain5();
        assert_eq!(
            g.k_hop_out_closure(&id("A"), 3).unwrap(),
            ids(&["B", "C", "D"])
        );
        assert!(g.k_hop_out_closure(&id("E"), 7).unwrap().is_empty());
        assert_eq!(g.k_hop_out_closure(&id("A"), 0), Err(GraphError::ZeroHops));
    }

    #[test]
    fn density_values() {
        assert_eq!(density(2, 1).unwrap(), 1.0);
        let published = density(190_381, 1_087_277).unwrap();
        assert_eq!(format_significant(published * 100.0, 2), "0.0060");
        let aps = density(463_348, 4_710_547).unwrap();
        assert_eq!(format_significant(aps * 100.0, 2), "0.0044");
        assert_eq!(density(1, 0), Err(GraphError::TooFewNodes(1)));
    }

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(format_significant(0.000059996, 4), "0.00006000");
        assert_eq!(format_significant(0.0059996, 4), "0.006000");
        assert_eq!(format_significant(1.0, 4), "1.000");
        assert_eq!(format_significant(123456.0, 4), "123500");
        assert_eq!(format_significant(9.9996, 4), "10.00");
    }

    #[test]
    fn path_histogram_on_chain() {
        let (_, g) = graph_of(&[("A", &["B"]), ("B", &["C"]), ("C", &[])]);
        assert_eq!(
            g.shortest_path_lengths_to(&id("C")).unwrap(),
            BTreeMap::from([(1, 1), (2, 1)])
        );
        assert!(g.shortest_path_lengths_to(&id("A")).unwrap().is_empty());
        let mut buf = Vec::new();
        write_histogram(&g.shortest_path_lengths_to(&id("C")).unwrap(), &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "length,count\n1,1\n2,1\n");
    }

    #[test]
    fn common_out_examples() {
        let (_, g) = graph_of(&[
            ("A", &["x", "y", "z"]),
            ("B", &["y", "z", "w"]),
            ("C", &["q"]),
            ("x", &[]),
            ("y", &[]),
            ("z", &[]),
            ("w", &[]),
            ("q", &[]),
        ]);
        assert_eq!(g.common_out_neighbors(&id("A"), &id("B")).unwrap(), 2);
        assert_eq!(g.common_out_neighbors(&id("A"), &id("A")).unwrap(), 3);
        assert_eq!(g.common_out_neighbors(&id("A"), &id("C")).unwrap(), 0);
    }

    #[test]
    fn acyclicity_checks() {
        let (_, g) = graph_of(&[("A", &["B"]), ("B", &["C"]), ("C", &[])]);
        assert_eq!(
            g.validate_acyclicity(),
            Acyclicity {
                acyclic: true,
                witness: None
            }
        );
        let (_, g) = graph_of(&[("A", &["B"]), ("B", &["A"])]);
        let res = g.validate_acyclicity();
        assert!(!res.acyclic);
        assert_eq!(res.witness, Some(vec![id("A"), id("B")]));
        assert!(!g.stats().acyclic);
    }

    #[test]
    fn stats_block() {
        let (_, g) = graph_of(&[("A", &["B", "C"]), ("B", &["C"]), ("C", &[])]);
        let s = g.stats();
        assert_eq!((s.n, s.m, s.max_in_degree), (3, 3, 2));
        assert_eq!(s.max_in_degree_id, Some(id("C")));
        assert_eq!(s.density, Some(1.0));
        let text = s.to_string();
        assert!(text.contains("density: 100% (1.000)"), "{text}");
        assert!(text.contains("acyclic: true"));
    }

    #[test]
    fn density_doubles_with_edges() {
        let names: Vec<ArticleId> = (0..10).map(|i| id(&format!("n{i}"))).collect();
        let sparse: Vec<(NodeIx, NodeIx)> = (1..10).map(|i| (i, 0)).collect();
        let mut dense = sparse.clone();
        dense.extend((2..10).map(|i| (i, 1)));
        dense.push((9, 2));
        let g1 = CitationGraph::from_index_pairs(names.clone(), sparse);
        let g2 = CitationGraph::from_index_pairs(names, dense);
        assert_eq!(g2.edge_count(), 2 * g1.edge_count());
        assert!((g2.density().unwrap() - 2.0 * g1.density().unwrap()).abs() < 1e-15);
    }

    #[test]
    fn keyword_subgraph_components() {
        let mut arts = vec![
            article("A", 2000, &["B"]),
            article("B", 1999, &[]),
            article("C", 2001, &[]),
            article("D", 2002, &["A"]),
        ];
        arts[0].title = "The adaptive lasso".into();
        arts[1].title = "Sparsity".into();
        arts[1].keywords = vec!["Adaptive  LASSO".into()];
        arts[2].title = "Lasso adaptive".into();
        let (c, _) = Corpus::from_articles(arts).unwrap();
        let g = CitationGraph::build(&c);
        let sub = keyword_subgraph(&c, &g, "adaptive lasso");
        assert_eq!(sub.nodes, vec![id("A"), id("B")]);
        assert_eq!(sub.edges, vec![(id("A"), id("B"))]);
        assert_eq!(sub.components, vec![vec![id("A"), id("B")]]);
        assert_eq!(sub.largest_component(), 2);

        let none = keyword_subgraph(&c, &g, "random matrices");
        assert!(none.nodes.is_empty() && none.components.is_empty());
        assert_eq!(none.largest_component(), 0);
    }
}
