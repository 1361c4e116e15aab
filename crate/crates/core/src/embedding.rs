//! Dense article vectors for event clustering.
//!
//! The default provider is a hashed bag of words: lowercase word tokens are
//! hashed with seeded 64-bit FNV-1a into `dim` buckets, weighted by term
//! frequency and L2-normalized. Externally trained vectors can be supplied
//! through a sidecar file of `id<TAB>v1,v2,...,vd` lines.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::word_tokens;

pub const DEFAULT_DIM: usize = 512;
pub const DEFAULT_SEED: u64 = 0x6e65_7773_7761_7463;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

#[derive(Debug, Clone, PartialEq)]
pub struct DocVector {
    values: Vec<f64>,
    norm_flag: bool,
}

impl DocVector {
    pub fn zeros(dim: usize) -> Self {
        DocVector {
            values: vec![0.0; dim],
            norm_flag: false,
        }
    }

    /// L2-normalizes `values`; an all-zero (or non-finite) input becomes the
    /// zero vector with `norm_flag == false`.
    pub fn normalized(mut values: Vec<f64>) -> Self {
        let norm = l2_norm(&values);
        if norm > 0.0 && norm.is_finite() {
            values.iter_mut().for_each(|v| *v /= norm);
            DocVector {
                values,
                norm_flag: true,
            }
        } else {
            DocVector::zeros(values.len())
        }
    }

    /// Wraps raw values without normalizing them.
    pub fn from_raw(values: Vec<f64>) -> Self {
        let norm = l2_norm(&values);
        DocVector {
            norm_flag: norm > 0.0 && norm.is_finite(),
            values,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn norm_flag(&self) -> bool {
        self.norm_flag
    }
}

fn l2_norm(values: &[f64]) -> f64 {
    values.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `1 - cos(u, v)`, clamped to `[0, 2]`. Returns 1.0 when either vector has
/// zero norm.
pub fn cosine_distance(u: &DocVector, v: &DocVector) -> Result<f64> {
    if u.dim() != v.dim() {
        return Err(Error::DimensionMismatch {
            expected: u.dim(),
            actual: v.dim(),
        });
    }
    if !u.norm_flag || !v.norm_flag {
        return Ok(1.0);
    }
    let dot: f64 = u.values.iter().zip(&v.values).map(|(a, b)| a * b).sum();
    let uu: f64 = u.values.iter().map(|a| a * a).sum();
    let vv: f64 = v.values.iter().map(|b| b * b).sum();
    // sqrt(uu * vv) == uu exactly when u == v, so identical inputs give 0.
    let cos = dot / (uu * vv).sqrt();
    Ok((1.0 - cos).clamp(0.0, 2.0))
}

pub trait EmbeddingProvider: Send + Sync {
    fn dim(&self) -> usize;

    /// Embeds one document. `id` is the article id, used by providers that
    /// look vectors up rather than computing them.
    fn embed(&self, id: &str, text: &str) -> DocVector;
}

#[derive(Debug, Clone)]
pub struct HashedBow {
    dim: usize,
    seed: u64,
}

impl HashedBow {
    pub fn new(dim: usize) -> Result<Self> {
        Self::with_seed(dim, DEFAULT_SEED)
    }

    pub fn with_seed(dim: usize, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("embedding.dim must be positive".into()));
        }
        Ok(HashedBow { dim, seed })
    }

    /// Bucket a (lowercase) token is hashed into.
    pub fn bucket(&self, token: &str) -> usize {
        (fnv1a64(self.seed, token.as_bytes()) % self.dim as u64) as usize
    }
}

impl Default for HashedBow {
    fn default() -> Self {
        HashedBow {
            dim: DEFAULT_DIM,
            seed: DEFAULT_SEED,
        }
    }
}

impl EmbeddingProvider for HashedBow {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, _id: &str, text: &str) -> DocVector {
        let mut values = vec![0.0; self.dim];
        for token in word_tokens(text) {
            values[self.bucket(&token)] += 1.0;
        }
        DocVector::normalized(values)
    }
}

/// 64-bit FNV-1a over the little-endian seed followed by `bytes`.
pub fn fnv1a64(seed: u64, bytes: &[u8]) -> u64 {
    seed.to_le_bytes()
        .iter()
        .chain(bytes)
        .fold(FNV_OFFSET, |hash, &b| (hash ^ b as u64).wrapping_mul(FNV_PRIME))
}

/// Precomputed vectors keyed by article id. Unknown ids embed to the zero
/// vector (and therefore end up as clustering noise).
#[derive(Debug, Clone)]
pub struct FileVectors {
    dim: usize,
    vectors: HashMap<String, DocVector>,
}

impl FileVectors {
    pub fn load(path: &Path, dim: usize) -> Result<Self> {
        let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&raw, dim)
    }

    pub fn parse(raw: &str, dim: usize) -> Result<Self> {
        let mut vectors = HashMap::new();
        for (idx, line) in raw.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let bad = |why: &str| Error::InvalidInput(format!("vector file line {}: {why}", idx + 1));
            let (id, csv) = line.split_once('\t').ok_or_else(|| bad("expected id<TAB>values"))?;
            let values = csv
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| bad(&e.to_string()))?;
            if values.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: values.len(),
                });
            }
            vectors.insert(id.to_string(), DocVector::normalized(values));
        }
        Ok(FileVectors { dim, vectors })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

impl EmbeddingProvider for FileVectors {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, id: &str, _text: &str) -> DocVector {
        match self.vectors.get(id) {
            Some(v) => v.clone(),
            None => {
                log::warn!("no precomputed vector for article {id}; treating as empty");
                DocVector::zeros(self.dim)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    #[default]
    HashedBow,
    File,
}
