//! Abstract embedding vectors and their on-disk store.
//!
//! Text format: a tab-separated header `model_tag dim count`, then one line
//! per article holding the id followed by `dim` decimal values, all tab
//! separated.
//!
//! Binary format: a 16-byte header (`LRECEMB1`, dim as u32 LE, count as
//! u32 LE) followed by `count * dim` little-endian f32 values in id-sorted
//! order. The ids live in a sidecar file (`<path>.ids`) whose first line is
//! the model tag and whose remaining lines are the ids in the same order.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use super::TextSimError;
use crate::corpus::ArticleId;

pub const BINARY_MAGIC: &[u8; 8] = b"LRECEMB1";

/// Output width of the default abstract embedding model.
pub const DEFAULT_DIM: usize = 1536;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector(Vec<f32>);

impl EmbeddingVector {
    pub fn new(values: Vec<f32>) -> Result<Self, TextSimError> {
        if values.is_empty() {
            return Err(TextSimError::EmptyVector);
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(TextSimError::NonFinite(i));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.0
            .iter()
            .map(|&x| f64::from(x) * f64::from(x))
            .sum::<f64>()
            .sqrt()
    }

    pub fn to_le_bytes(&self) -> Vec<u8> {
        self.0.iter().flat_map(|v| v.to_le_bytes()).collect()
    }

    pub fn from_le_bytes(bytes: &[u8]) -> Result<Self, TextSimError> {
        if bytes.len() % 4 != 0 {
            return Err(TextSimError::Format(format!(
                "vector byte length {} is not a multiple of 4",
                bytes.len()
            )));
        }
        Self::new(
            bytes
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect(),
        )
    }
}

/// Id-keyed embeddings sharing one dimension and producing model.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    model_tag: String,
    dim: usize,
    vectors: BTreeMap<ArticleId, EmbeddingVector>,
}

impl EmbeddingStore {
    pub fn new(model_tag: impl Into<String>, dim: usize) -> Self {
        Self {
            model_tag: model_tag.into(),
            dim,
            vectors: BTreeMap::new(),
        }
    }

    pub fn model_tag(&self) -> &str {
        &self.model_tag
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn insert(&mut self, id: ArticleId, v: EmbeddingVector) -> Result<(), TextSimError> {
        if v.len() != self.dim {
            return Err(TextSimError::DimensionMismatch {
                expected: self.dim,
                found: v.len(),
            });
        }
        self.vectors.insert(id, v);
        Ok(())
    }

    pub fn get(&self, id: &ArticleId) -> Option<&EmbeddingVector> {
        self.vectors.get(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ArticleId, &EmbeddingVector)> {
        self.vectors.iter()
    }

    /// Load either format; `.bin` selects the binary variant.
    pub fn load(path: &Path) -> Result<Self, TextSimError> {
        if path.extension().is_some_and(|e| e == "bin") {
            Self::read_binary(path)
        } else {
            Self::read_text(path)
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), TextSimError> {
        if path.extension().is_some_and(|e| e == "bin") {
            self.write_binary(path)
        } else {
            self.write_text(path)
        }
    }

    pub fn write_text(&self, path: &Path) -> Result<(), TextSimError> {
        let mut w = BufWriter::new(create(path)?);
        let io = |e| io_err(path, e);
        writeln!(w, "{}\t{}\t{}", self.model_tag, self.dim, self.len()).map_err(io)?;
        for (id, v) in &self.vectors {
            write!(w, "{id}").map_err(io)?;
            for x in v.values() {
                write!(w, "\t{x}").map_err(io)?;
            }
            writeln!(w).map_err(io)?;
        }
        w.flush().map_err(io)
    }

    pub fn read_text(path: &Path) -> Result<Self, TextSimError> {
        let reader = BufReader::new(open(path)?);
        let mut lines = reader.lines().enumerate();
        let bad = |line: usize, msg: &str| TextSimError::Format(format!("{}:{line}: {msg}", path.display()));
        let header = match lines.next() {
            Some((_, l)) => l.map_err(|e| io_err(path, e))?,
            None => return Err(bad(1, "missing header")),
        };
        let fields: Vec<&str> = header.split('\t').collect();
        if fields.len() != 3 {
            return Err(bad(1, "header must be model_tag, dim, count"));
        }
        let dim: usize = fields[1].parse().map_err(|_| bad(1, "bad dim"))?;
        let count: usize = fields[2].parse().map_err(|_| bad(1, "bad count"))?;
        let mut store = Self::new(fields[0], dim);
        for (i, line) in lines {
            let line = line.map_err(|e| io_err(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split('\t');
            let id = ArticleId::new(parts.next().unwrap_or_default())
                .map_err(|m| bad(i + 1, &m))?;
            let values = parts
                .map(str::parse::<f32>)
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| bad(i + 1, &e.to_string()))?;
            let v = EmbeddingVector::new(values).map_err(|e| bad(i + 1, &e.to_string()))?;
            store
                .insert(id, v)
                .map_err(|e| bad(i + 1, &e.to_string()))?;
        }
        if store.len() != count {
            return Err(bad(1, &format!("header count {count}, found {}", store.len())));
        }
        Ok(store)
    }

    pub fn sidecar_path(path: &Path) -> PathBuf {
        let mut s = path.as_os_str().to_owned();
        s.push(".ids");
        PathBuf::from(s)
    }

    pub fn write_binary(&self, path: &Path) -> Result<(), TextSimError> {
        let io = |e| io_err(path, e);
        let dim = u32::try_from(self.dim).map_err(|_| TextSimError::Format("dim exceeds u32".into()))?;
        let count =
            u32::try_from(self.len()).map_err(|_| TextSimError::Format("count exceeds u32".into()))?;
        let mut w = BufWriter::new(create(path)?);
        w.write_all(BINARY_MAGIC).map_err(io)?;
        w.write_all(&dim.to_le_bytes()).map_err(io)?;
        w.write_all(&count.to_le_bytes()).map_err(io)?;
        for v in self.vectors.values() {
            w.write_all(&v.to_le_bytes()).map_err(io)?;
        }
        w.flush().map_err(io)?;

        let side = Self::sidecar_path(path);
        let mut s = BufWriter::new(create(&side)?);
        let io = |e| io_err(&side, e);
        writeln!(s, "{}", self.model_tag).map_err(io)?;
        for id in self.vectors.keys() {
            writeln!(s, "{id}").map_err(io)?;
        }
        s.flush().map_err(io)
    }

    pub fn read_binary(path: &Path) -> Result<Self, TextSimError> {
        let mut bytes = Vec::new();
        open(path)?
            .read_to_end(&mut bytes)
            .map_err(|e| io_err(path, e))?;
        if bytes.len() < 16 || &bytes[..8] != BINARY_MAGIC {
            return Err(TextSimError::Format(format!(
                "{}: not an embedding store",
                path.display()
            )));
        }
        let dim = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let count = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
        let body = &bytes[16..];
        if dim == 0 || body.len() != count * dim * 4 {
            return Err(TextSimError::Format(format!(
                "{}: expected {count} x {dim} floats, body has {} bytes",
                path.display(),
                body.len()
            )));
        }

        let side = Self::sidecar_path(path);
        let mut lines = BufReader::new(open(&side)?).lines();
        let model_tag = lines
            .next()
            .transpose()
            .map_err(|e| io_err(&side, e))?
            .ok_or_else(|| TextSimError::Format(format!("{}: empty sidecar", side.display())))?;
        let ids = lines
            .map(|l| {
                let l = l.map_err(|e| io_err(&side, e))?;
                ArticleId::new(l).map_err(TextSimError::Format)
            })
            .collect::<Result<Vec<_>, _>>()?;
        if ids.len() != count {
            return Err(TextSimError::Format(format!(
                "{}: {} ids for {count} vectors",
                side.display(),
                ids.len()
            )));
        }
        if ids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(TextSimError::Format(format!(
                "{}: ids are not strictly sorted",
                side.display()
            )));
        }

        let mut store = Self::new(model_tag, dim);
        for (id, chunk) in ids.into_iter().zip(body.chunks_exact(dim * 4)) {
            store.insert(id, EmbeddingVector::from_le_bytes(chunk)?)?;
        }
        Ok(store)
    }
}

fn io_err(path: &Path, source: std::io::Error) -> TextSimError {
    TextSimError::Io {
        path: path.to_owned(),
        source,
    }
}

fn open(path: &Path) -> Result<File, TextSimError> {
    File::open(path).map_err(|e| io_err(path, e))
}

fn create(path: &Path) -> Result<File, TextSimError> {
    File::create(path).map_err(|e| io_err(path, e))
}
