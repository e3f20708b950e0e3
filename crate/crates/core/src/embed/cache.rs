//! Persistent embedding cache.
//!
//! Entries are keyed by SHA-256 of `model_tag \0 normalized_text` and kept
//! in an append-only log (`embeddings.cache`). Each record is the 32-byte
//! key, the dimension as u32 LE, then the vector as f32 LE.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use sha2::{Digest, Sha256};

use super::EmbedError;
use crate::text::collapse_whitespace;
use crate::textsim::EmbeddingVector;

pub const CACHE_FILE: &str = "embeddings.cache";

pub type CacheKey = [u8; 32];

pub fn cache_key(model_tag: &str, text: &str) -> CacheKey {
    let mut h = Sha256::new();
    h.update(model_tag.as_bytes());
    h.update([0u8]);
    h.update(collapse_whitespace(text).as_bytes());
    h.finalize().into()
}

#[derive(Debug)]
pub struct EmbedCache {
    path: PathBuf,
    entries: RwLock<HashMap<CacheKey, EmbeddingVector>>,
    writer: Mutex<BufWriter<File>>,
}

impl EmbedCache {
    /// Open (creating if needed) the cache under `dir`.
    pub fn open(dir: &Path) -> Result<Self, EmbedError> {
        std::fs::create_dir_all(dir).map_err(|e| EmbedError::cache(dir, e))?;
        let path = dir.join(CACHE_FILE);
        let mut entries = HashMap::new();
        let mut valid_len = 0u64;
        if path.exists() {
            let mut bytes = Vec::new();
            File::open(&path)
                .and_then(|mut f| f.read_to_end(&mut bytes))
                .map_err(|e| EmbedError::cache(&path, e))?;
            let mut pos = 0usize;
            while pos + 36 <= bytes.len() {
                let key: CacheKey = bytes[pos..pos + 32].try_into().unwrap();
                let dim = u32::from_le_bytes(bytes[pos + 32..pos + 36].try_into().unwrap()) as usize;
                let end = pos + 36 + dim * 4;
                if end > bytes.len() {
                    break;
                }
                let v = EmbeddingVector::from_le_bytes(&bytes[pos + 36..end])
                    .map_err(|e| EmbedError::CacheCorrupt(format!("{}: {e}", path.display())))?;
                entries.insert(key, v);
                pos = end;
            }
            if pos != bytes.len() {
                tracing::warn!(
                    path = %path.display(),
                    trailing = bytes.len() - pos,
                    "discarding incomplete trailing cache record"
                );
            }
            valid_len = pos as u64;
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| EmbedError::cache(&path, e))?;
        if file.metadata().map(|m| m.len()).unwrap_or(0) != valid_len {
            file.set_len(valid_len).map_err(|e| EmbedError::cache(&path, e))?;
        }
        Ok(Self {
            path,
            entries: RwLock::new(entries),
            writer: Mutex::new(BufWriter::new(file)),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.entries.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, key: &CacheKey) -> Option<EmbeddingVector> {
        self.entries.read().unwrap().get(key).cloned()
    }

    /// Append entries to disk, then publish them to readers.
    pub fn insert_many(&self, items: &[(CacheKey, EmbeddingVector)]) -> Result<(), EmbedError> {
        if items.is_empty() {
            return Ok(());
        }
        let mut w = self.writer.lock().unwrap();
        let io = |e| EmbedError::cache(&self.path, e);
        for (key, v) in items {
            w.write_all(key).map_err(io)?;
            w.write_all(&(v.len() as u32).to_le_bytes()).map_err(io)?;
            w.write_all(&v.to_le_bytes()).map_err(io)?;
        }
        w.flush().map_err(io)?;
        let mut entries = self.entries.write().unwrap();
        for (key, v) in items {
            entries.insert(*key, v.clone());
        }
        Ok(())
    }
}
