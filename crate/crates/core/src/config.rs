//! TOML configuration shared by the CLI and the service.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embed::EmbedConfig;
use crate::recommend::{WeightConfig, WeightError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parsing {path}: {source}")]
    Parse {
        path: PathBuf,
        source: toml::de::Error,
    },
    #[error(transparent)]
    Weights(#[from] WeightError),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataPaths {
    /// JSON Lines article records.
    pub articles: Option<PathBuf>,
    /// Optional `citing_id,cited_id` CSV.
    pub edges: Option<PathBuf>,
    /// Embedding store (text, or binary with a `.bin` extension).
    pub embeddings: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
}

/// Either a preset name or the ten raw values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightSpec {
    Preset(String),
    Values(Vec<f64>),
}

impl WeightSpec {
    pub fn resolve(&self) -> Result<WeightConfig, WeightError> {
        match self {
            Self::Preset(name) => name.parse(),
            Self::Values(v) => WeightConfig::from_values(v),
        }
    }
}

impl Default for WeightSpec {
    fn default() -> Self {
        Self::Preset("uniform".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub bind: SocketAddr,
    /// Allowed browser origins; `*` allows any.
    pub cors_origins: Vec<String>,
    /// Upper bound on `k` and on search result counts.
    pub max_results: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            bind: SocketAddr::from(([127, 0, 0, 1], 8080)),
            cors_origins: vec!["*".into()],
            max_results: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    pub data: DataPaths,
    pub weights: WeightSpec,
    pub service: ServiceConfig,
    pub embedding: EmbedConfig,
    pub log_level: String,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            data: DataPaths::default(),
            weights: WeightSpec::default(),
            service: ServiceConfig::default(),
            embedding: EmbedConfig::default(),
            log_level: "info".into(),
        }
    }
}

impl EngineConfig {
    pub fn from_toml(text: &str, origin: &Path) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|source| ConfigError::Parse {
            path: origin.to_owned(),
            source,
        })?;
        cfg.weights.resolve()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_toml(&text, path)
    }

    pub fn default_weights(&self) -> Result<WeightConfig, WeightError> {
        self.weights.resolve()
    }
}
