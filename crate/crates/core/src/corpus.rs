//! Article dataset loading, validation and indexing.
//!
//! Articles are read from a line-delimited JSON file, one record per line.
//! Citation pairs may additionally be supplied as a `citing_id,cited_id`
//! edge file; inline and file references are merged. References that point
//! outside the dataset are dropped and counted in the [`LoadReport`].

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::normalize_title;

/// Smallest publication year accepted by the loader.
pub const MIN_YEAR: i32 = 1800;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed record: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("duplicate article id {0:?}")]
    DuplicateId(String),
    #[error("invalid article {id:?}: {message}")]
    Invalid { id: String, message: String },
}

/// Opaque, non-empty article identifier such as `zou06`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ArticleId(String);

impl ArticleId {
    pub fn new(id: impl Into<String>) -> Result<Self, String> {
        let id = id.into();
        if id.trim().is_empty() {
            return Err("article id must be non-empty".to_owned());
        }
        Ok(Self(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for ArticleId {
    type Error = String;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<ArticleId> for String {
    fn from(id: ArticleId) -> Self {
        id.0
    }
}

impl fmt::Display for ArticleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::str::FromStr for ArticleId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::new(s)
    }
}

/// One corpus record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Article {
    pub id: ArticleId,
    pub title: String,
    #[serde(default)]
    pub authors: Vec<String>,
    #[serde(default)]
    pub publisher: String,
    pub year: i32,
    /// Absent when the source has no abstract. Blank strings normalize to `None`.
    #[serde(rename = "abstract", default)]
    pub abstract_text: Option<String>,
    #[serde(default)]
    pub keywords: Vec<String>,
    /// Global citation count as recorded in the dataset, if known.
    #[serde(default)]
    pub citation_count: Option<u64>,
    /// In-dataset references only once loaded.
    #[serde(default)]
    pub references: Vec<ArticleId>,
}

impl Article {
    pub fn has_abstract(&self) -> bool {
        self.abstract_text.is_some()
    }
}

/// Counts gathered while loading a corpus.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadReport {
    pub articles_parsed: usize,
    pub edge_pairs_parsed: usize,
    pub references_kept: usize,
    pub dangling_references_dropped: usize,
    pub self_citations_removed: usize,
    pub duplicate_references_removed: usize,
    pub blank_abstracts_normalized: usize,
}

impl fmt::Display for LoadReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "articles_parsed: {}", self.articles_parsed)?;
        writeln!(f, "edge_pairs_parsed: {}", self.edge_pairs_parsed)?;
        writeln!(f, "references_kept: {}", self.references_kept)?;
        writeln!(
            f,
            "dangling_references_dropped: {}",
            self.dangling_references_dropped
        )?;
        writeln!(f, "self_citations_removed: {}", self.self_citations_removed)?;
        writeln!(
            f,
            "duplicate_references_removed: {}",
            self.duplicate_references_removed
        )?;
        write!(
            f,
            "blank_abstracts_normalized: {}",
            self.blank_abstracts_normalized
        )
    }
}

/// Immutable, id-indexed article collection.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    articles: Vec<Article>,
    index: HashMap<ArticleId, usize>,
    normalized_titles: Vec<String>,
    by_year: BTreeMap<i32, usize>,
    by_journal: BTreeMap<String, usize>,
}

/// Load a corpus from an articles file and an optional edge file.
pub fn load_corpus(
    articles_path: &Path,
    edges_path: Option<&Path>,
) -> Result<(Corpus, LoadReport), CorpusError> {
    Corpus::load(articles_path, edges_path)
}

impl Corpus {
    pub fn load(
        articles_path: &Path,
        edges_path: Option<&Path>,
    ) -> Result<(Self, LoadReport), CorpusError> {
        let articles = read_articles(articles_path)?;
        let edges = match edges_path {
            Some(p) => read_edges(p)?,
            None => Vec::new(),
        };
        Self::from_parts(articles, edges)
    }

    /// Build from in-memory records, applying the same validation as [`Corpus::load`].
    pub fn from_articles(articles: Vec<Article>) -> Result<(Self, LoadReport), CorpusError> {
        Self::from_parts(articles, Vec::new())
    }

    pub fn from_parts(
        mut articles: Vec<Article>,
        edges: Vec<(ArticleId, ArticleId)>,
    ) -> Result<(Self, LoadReport), CorpusError> {
        let mut report = LoadReport {
            articles_parsed: articles.len(),
            edge_pairs_parsed: edges.len(),
            ..LoadReport::default()
        };

        let mut index = HashMap::with_capacity(articles.len());
        for (i, a) in articles.iter().enumerate() {
            if a.year < MIN_YEAR {
                return Err(CorpusError::Invalid {
                    id: a.id.to_string(),
                    message: format!("year {} is before {MIN_YEAR}", a.year),
                });
            }
            if index.insert(a.id.clone(), i).is_some() {
                return Err(CorpusError::DuplicateId(a.id.to_string()));
            }
        }

        let mut extra: Vec<Vec<ArticleId>> = vec![Vec::new(); articles.len()];
        for (citing, cited) in edges {
            match index.get(&citing) {
                Some(&i) => extra[i].push(cited),
                None => report.dangling_references_dropped += 1,
            }
        }

        for (a, extra) in articles.iter_mut().zip(extra) {
            if let Some(text) = &a.abstract_text {
                if text.trim().is_empty() {
                    a.abstract_text = None;
                    report.blank_abstracts_normalized += 1;
                }
            }
            let raw = std::mem::take(&mut a.references);
            let mut seen = HashSet::with_capacity(raw.len() + extra.len());
            for r in raw.into_iter().chain(extra) {
                if r == a.id {
                    report.self_citations_removed += 1;
                } else if !index.contains_key(&r) {
                    report.dangling_references_dropped += 1;
                } else if !seen.insert(r.clone()) {
                    report.duplicate_references_removed += 1;
                } else {
                    a.references.push(r);
                }
            }
            report.references_kept += a.references.len();
        }

        let mut by_year = BTreeMap::new();
        let mut by_journal = BTreeMap::new();
        for a in &articles {
            *by_year.entry(a.year).or_insert(0) += 1;
            *by_journal.entry(a.publisher.clone()).or_insert(0) += 1;
        }
        let normalized_titles = articles.iter().map(|a| normalize_title(&a.title)).collect();

        Ok((
            Self {
                articles,
                index,
                normalized_titles,
                by_year,
                by_journal,
            },
            report,
        ))
    }

    pub fn len(&self) -> usize {
        self.articles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.articles.is_empty()
    }

    pub fn articles(&self) -> &[Article] {
        &self.articles
    }

    pub fn get(&self, id: &ArticleId) -> Option<&Article> {
        self.index.get(id).map(|&i| &self.articles[i])
    }

    /// Position of `id` in load order. Graph node indices use the same order.
    pub fn position(&self, id: &ArticleId) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn normalized_title(&self, position: usize) -> &str {
        &self.normalized_titles[position]
    }

    pub fn yearly_counts(&self) -> BTreeMap<i32, usize> {
        self.by_year.clone()
    }

    pub fn journal_counts(&self) -> BTreeMap<String, usize> {
        self.by_journal.clone()
    }

    /// Earliest and latest publication year, `None` when empty.
    pub fn year_range(&self) -> Option<(i32, i32)> {
        let lo = *self.by_year.keys().next()?;
        let hi = *self.by_year.keys().next_back()?;
        Some((lo, hi))
    }

    /// Write the validated corpus back out in the articles-file format.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for a in &self.articles {
            serde_json::to_writer(&mut w, a)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Year → article count.
pub fn yearly_counts(corpus: &Corpus) -> BTreeMap<i32, usize> {
    corpus.yearly_counts()
}

/// Journal → article count.
pub fn journal_counts(corpus: &Corpus) -> BTreeMap<String, usize> {
    corpus.journal_counts()
}

fn open(path: &Path) -> Result<BufReader<File>, CorpusError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| CorpusError::Io {
            path: path.to_owned(),
            source,
        })
}

fn read_articles(path: &Path) -> Result<Vec<Article>, CorpusError> {
    let mut out = Vec::new();
    for (n, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|source| CorpusError::Io {
            path: path.to_owned(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let article: Article =
            serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
                path: path.to_owned(),
                line: n + 1,
                message: e.to_string(),
            })?;
        out.push(article);
    }
    Ok(out)
}

const EDGE_HEADERS: [&str; 4] = ["citing_id", "citing", "source", "from"];

fn read_edges(path: &Path) -> Result<Vec<(ArticleId, ArticleId)>, CorpusError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(open(path)?);
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let malformed = |message: String, line: usize| CorpusError::Malformed {
            path: path.to_owned(),
            line,
            message,
        };
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(i + 1, |p| p.line() as usize);
            malformed(e.to_string(), line)
        })?;
        let line = rec.position().map_or(i + 1, |p| p.line() as usize);
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if rec.len() != 2 {
            return Err(malformed(
                format!("expected 2 fields, found {}", rec.len()),
                line,
            ));
        }
        if i == 0 && EDGE_HEADERS.iter().any(|h| rec[0].eq_ignore_ascii_case(h)) {
            continue;
        }
        let citing = ArticleId::new(&rec[0]).map_err(|m| malformed(m, line))?;
        let cited = ArticleId::new(&rec[1]).map_err(|m| malformed(m, line))?;
        out.push((citing, cited));
    }
    Ok(out)
}
