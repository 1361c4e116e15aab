//! Runtime configuration, read from TOML.
//!
//! ```toml
//! data_dir = "newswatch-data"
//!
//! [batch]
//! period = "24h"
//!
//! [embedding]
//! provider = "hashed_bow"      # or "file"
//! dim = 512
//! # vectors_path = "vectors.tsv"
//!
//! [cluster]
//! eps = 0.55
//! min_members = 2
//!
//! [dedup]
//! n = 3
//! theta = 0.5
//! # stopwords_path = "stopwords.txt"
//!
//! [features]
//! families = "all"
//! min_df = 2
//! l2_lambda = 1.0
//!
//! [service]
//! port = 8080
//! max_text_bytes = 1000000
//! reload_secs = 10
//! # model_path = "model.nwm"
//! # static_dir = "webui/dist"
//! ```
//!
//! Every key is optional. `NEWSWATCH_DATA_DIR` overrides `data_dir`.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::clustering::ClusteringConfig;
use crate::corpus::Period;
use crate::dedup::{self, DedupConfig};
use crate::embedding::{EmbeddingProvider, FileVectors, HashedBow, ProviderKind, DEFAULT_DIM};
use crate::error::{Error, Result};
use crate::features::FamilyFlags;
use crate::model::DEFAULT_L2_LAMBDA;

pub const DATA_DIR_ENV: &str = "NEWSWATCH_DATA_DIR";
pub const DEFAULT_DATA_DIR: &str = "newswatch-data";
pub const MODEL_FILE: &str = "model.nwm";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub data_dir: PathBuf,
    pub batch: BatchSection,
    pub embedding: EmbeddingSection,
    pub cluster: ClusteringConfig,
    pub dedup: DedupSection,
    pub features: FeatureSection,
    pub service: ServiceSection,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            data_dir: PathBuf::from(DEFAULT_DATA_DIR),
            batch: BatchSection::default(),
            embedding: EmbeddingSection::default(),
            cluster: ClusteringConfig::default(),
            dedup: DedupSection::default(),
            features: FeatureSection::default(),
            service: ServiceSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BatchSection {
    pub period: String,
}

impl Default for BatchSection {
    fn default() -> Self {
        BatchSection { period: "24h".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmbeddingSection {
    pub provider: ProviderKind,
    pub dim: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vectors_path: Option<PathBuf>,
}

impl Default for EmbeddingSection {
    fn default() -> Self {
        EmbeddingSection {
            provider: ProviderKind::HashedBow,
            dim: DEFAULT_DIM,
            vectors_path: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DedupSection {
    pub n: usize,
    pub theta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stopwords_path: Option<PathBuf>,
}

impl Default for DedupSection {
    fn default() -> Self {
        DedupSection {
            n: dedup::DEFAULT_N,
            theta: dedup::DEFAULT_THETA,
            stopwords_path: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeatureSection {
    pub families: String,
    pub min_df: usize,
    pub l2_lambda: f64,
}

impl Default for FeatureSection {
    fn default() -> Self {
        FeatureSection {
            families: "all".into(),
            min_df: 2,
            l2_lambda: DEFAULT_L2_LAMBDA,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ServiceSection {
    pub port: u16,
    /// Largest accepted `text` in a score request, in UTF-8 bytes.
    pub max_text_bytes: usize,
    /// How often the server checks the store for a newer run.
    pub reload_secs: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model_path: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub static_dir: Option<PathBuf>,
}

impl Default for ServiceSection {
    fn default() -> Self {
        ServiceSection {
            port: 8080,
            max_text_bytes: 1_000_000,
            reload_secs: 10,
            model_path: None,
            static_dir: None,
        }
    }
}

impl Config {
    pub fn from_toml_str(raw: &str) -> Result<Self> {
        let config: Config = toml::from_str(raw).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads `path` (or the defaults when `None`) and applies the
    /// environment override.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let mut config = match path {
            Some(path) => {
                let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                Self::from_toml_str(&raw)?
            }
            None => Config::default(),
        };
        config.apply_data_dir_override(std::env::var_os(DATA_DIR_ENV).map(PathBuf::from));
        Ok(config)
    }

    pub fn apply_data_dir_override(&mut self, data_dir: Option<PathBuf>) {
        if let Some(dir) = data_dir.filter(|d| !d.as_os_str().is_empty()) {
            self.data_dir = dir;
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.period()?;
        self.cluster.validate()?;
        if self.embedding.dim == 0 {
            return Err(Error::Config("embedding.dim must be positive".into()));
        }
        if self.embedding.provider == ProviderKind::File && self.embedding.vectors_path.is_none() {
            return Err(Error::Config(
                "embedding.provider = \"file\" needs embedding.vectors_path".into(),
            ));
        }
        DedupConfig::new(self.dedup.n, self.dedup.theta, Default::default())?;
        self.families()?;
        if !(self.features.l2_lambda.is_finite() && self.features.l2_lambda > 0.0) {
            return Err(Error::Config("features.l2_lambda must be positive".into()));
        }
        if self.service.max_text_bytes == 0 {
            return Err(Error::Config("service.max_text_bytes must be positive".into()));
        }
        Ok(())
    }

    pub fn period(&self) -> Result<Period> {
        Period::from_str(&self.batch.period).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn families(&self) -> Result<FamilyFlags> {
        FamilyFlags::from_str(&self.features.families).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn model_path(&self) -> PathBuf {
        self.service
            .model_path
            .clone()
            .unwrap_or_else(|| self.data_dir.join(MODEL_FILE))
    }

    pub fn dedup_config(&self) -> Result<DedupConfig> {
        let stopwords = match &self.dedup.stopwords_path {
            Some(path) => {
                let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                dedup::parse_word_list(&raw)
            }
            None => dedup::default_stopwords(),
        };
        DedupConfig::new(self.dedup.n, self.dedup.theta, stopwords)
    }

    pub fn embedding_provider(&self) -> Result<Box<dyn EmbeddingProvider>> {
        Ok(match self.embedding.provider {
            ProviderKind::HashedBow => Box::new(HashedBow::new(self.embedding.dim)?),
            ProviderKind::File => {
                let path = self
                    .embedding
                    .vectors_path
                    .as_deref()
                    .ok_or_else(|| Error::Config("embedding.vectors_path is not set".into()))?;
                Box::new(FileVectors::load(path, self.embedding.dim)?)
            }
        })
    }

    /// Hex SHA-256 over the settings that affect batch output. Paths and
    /// service settings are left out, so moving the store does not change it.
    pub fn pipeline_fingerprint(&self) -> Result<String> {
        let dedup = self.dedup_config()?;
        let canonical = serde_json::json!({
            "period_seconds": self.period()?.duration().num_seconds(),
            "embedding": {
                "provider": self.embedding.provider,
                "dim": self.embedding.dim,
            },
            "cluster": self.cluster,
            "dedup": {
                "n": dedup.n,
                "theta": dedup.theta,
                "stopwords": dedup.stopwords,
            },
        });
        Ok(hex::encode(Sha256::digest(canonical.to_string().as_bytes())))
    }
}
